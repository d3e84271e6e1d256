#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "epidiv/mock_backends.hpp"
#include "epidiv/represent.hpp"
#include "epidiv/rng.hpp"
#include "epidiv/synthetic.hpp"

using namespace epidiv;

namespace {

std::vector<Claim> tagged_claims(const std::vector<int>& classes, const std::string& prefix) {
    std::vector<Claim> claims(classes.size());
    for (size_t i = 0; i < classes.size(); ++i) {
        claims[i].id = prefix + std::to_string(i);
        claims[i].topic_id = "t";
        claims[i].response_ref.generator_id = "gen";
        claims[i].response_ref.setting = GenerationSetting::IFT;
        claims[i].text = render_tagged_claim(
            "Observation {n} concerns the subject tagged [[k{class}]].",
            classes[i], static_cast<int64_t>(i) + (prefix == "ref" ? 100000 : 0));
    }
    return claims;
}

std::vector<ReferenceClaim> as_references(const std::vector<Claim>& claims,
                                          const std::string& language) {
    std::vector<ReferenceClaim> refs;
    for (const auto& c : claims) {
        refs.push_back({c.id, c.topic_id, language, c.text});
    }
    return refs;
}

}  // namespace

TEST_CASE("match_claims against the mock oracle") {
    MockSuite suite = mock_suite(MockSpec{});
    CachedEntailmentBackend entailment(suite.entailment);
    MatchParams params;

    SUBCASE("identical text matches at rank 1") {
        std::vector<Claim> generated = tagged_claims({1, 2, 3}, "g");
        std::vector<ReferenceClaim> refs = {{"r0", "t", "en", generated[1].text}};
        std::vector<std::string> texts;
        for (const auto& c : generated) texts.push_back(c.text);
        auto embeddings = embed_batch(*suite.embedding, texts);
        auto matches =
            match_claims(refs, generated, embeddings, *suite.embedding, entailment, params);
        REQUIRE(matches.size() == 1);
        CHECK(matches[0].generated_claim_id == "g1");
        CHECK(matches[0].cosine == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(matches[0].mutual_entailment);
    }
    SUBCASE("disjoint hidden classes produce zero matches") {
        std::vector<Claim> generated = tagged_claims({1, 1, 2, 2}, "g");
        std::vector<ReferenceClaim> refs =
            as_references(tagged_claims({7, 8, 9}, "ref"), "en");
        std::vector<std::string> texts;
        for (const auto& c : generated) texts.push_back(c.text);
        auto embeddings = embed_batch(*suite.embedding, texts);
        auto matches =
            match_claims(refs, generated, embeddings, *suite.embedding, entailment, params);
        CHECK(matches.empty());
    }
    SUBCASE("RAG claims are refused") {
        std::vector<Claim> generated = tagged_claims({1}, "g");
        generated[0].response_ref.setting = GenerationSetting::RAG;
        std::vector<ReferenceClaim> refs = {{"r0", "t", "en", "x [[k1]]"}};
        std::vector<std::string> texts = {generated[0].text};
        auto embeddings = embed_batch(*suite.embedding, texts);
        CHECK_THROWS_AS(
            match_claims(refs, generated, embeddings, *suite.embedding, entailment, params),
            EpidivError);
    }
    SUBCASE("50 x 500 with 30% class overlap equals the brute-force oracle") {
        Rng rng(808);
        std::vector<int> gen_classes, ref_classes;
        // generated spans classes 0..9; references span 7..16 (30% overlap: 7,8,9)
        for (int i = 0; i < 500; ++i) gen_classes.push_back(static_cast<int>(rng.next_below(10)));
        for (int i = 0; i < 50; ++i) {
            ref_classes.push_back(7 + static_cast<int>(rng.next_below(10)));
        }
        std::vector<Claim> generated = tagged_claims(gen_classes, "g");
        std::vector<ReferenceClaim> refs =
            as_references(tagged_claims(ref_classes, "ref"), "en");
        std::vector<std::string> texts;
        for (const auto& c : generated) texts.push_back(c.text);
        auto embeddings = embed_batch(*suite.embedding, texts);
        auto matches =
            match_claims(refs, generated, embeddings, *suite.embedding, entailment, params);

        // brute force: all-pairs tag equality restricted to top-k retrieval
        std::vector<std::string> ref_texts;
        for (const auto& r : refs) ref_texts.push_back(r.text);
        auto ref_embeddings = embed_batch(*suite.embedding, ref_texts);
        std::set<std::pair<std::string, std::string>> expected;
        for (size_t r = 0; r < refs.size(); ++r) {
            std::vector<std::pair<double, size_t>> ranked;
            for (size_t gidx = 0; gidx < generated.size(); ++gidx) {
                ranked.emplace_back(cosine_similarity(ref_embeddings[r], embeddings[gidx]), gidx);
            }
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (size_t k = 0; k < std::min<size_t>(6, ranked.size()); ++k) {
                size_t gidx = ranked[k].second;
                if (ref_classes[r] == gen_classes[gidx]) {
                    expected.emplace(refs[r].id, generated[gidx].id);
                }
            }
        }
        std::set<std::pair<std::string, std::string>> actual;
        for (const auto& match : matches) {
            actual.emplace(match.reference_claim_id, match.generated_claim_id);
        }
        CHECK(actual == expected);
        CHECK_FALSE(actual.empty());
    }
}

TEST_CASE("minimal representativeness HSD") {
    std::vector<int> classes;
    for (int cls = 0; cls < 4; ++cls) {
        for (int i = 0; i < 10; ++i) classes.push_back(cls);
    }
    std::vector<Claim> generated = tagged_claims(classes, "g");
    MeaningClassTable table;
    for (size_t i = 0; i < generated.size(); ++i) {
        table.cluster_of[generated[i].id] = classes[i];
        ++table.counts[classes[i]];
        ++table.n;
    }

    SUBCASE("zero matches: hsd 0 with an empty flag") {
        DiversityReport report = minimal_representativeness_hsd(
            generated, table, {}, "gen", "t", GenerationSetting::IFT);
        CHECK(report.n == 0);
        CHECK(report.hsd == 0.0);
        REQUIRE_FALSE(report.flags.empty());
        CHECK(report.flags[0] == "empty");
    }
    SUBCASE("all claims matched: equals the unfiltered HSD (4.0)") {
        std::vector<MatchRecord> matches;
        for (const auto& c : generated) matches.push_back({"r", c.id, 1.0, true});
        DiversityReport report = minimal_representativeness_hsd(
            generated, table, matches, "gen", "t", GenerationSetting::IFT);
        CHECK(report.n == 40);
        CHECK(report.hsd == doctest::Approx(4.0).epsilon(1e-9));
    }
    SUBCASE("matches covering 2 of 4 equal clusters: hsd = 2.0") {
        std::vector<MatchRecord> matches;
        for (size_t i = 0; i < generated.size(); ++i) {
            if (classes[i] <= 1) matches.push_back({"r", generated[i].id, 1.0, true});
        }
        DiversityReport report = minimal_representativeness_hsd(
            generated, table, matches, "gen", "t", GenerationSetting::IFT);
        CHECK(report.n == 20);
        CHECK(report.num_classes == 2);
        CHECK(report.hsd == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("a claim matched by several references counts once") {
        std::vector<MatchRecord> matches = {
            {"r1", generated[0].id, 1.0, true},
            {"r2", generated[0].id, 0.95, true},
        };
        DiversityReport report = minimal_representativeness_hsd(
            generated, table, matches, "gen", "t", GenerationSetting::IFT);
        CHECK(report.n == 1);
    }
    SUBCASE("filter monotonicity") {
        Rng rng(31);
        std::vector<MatchRecord> matches;
        for (const auto& c : generated) {
            if (rng.next_below(2) == 0) matches.push_back({"r", c.id, 1.0, true});
        }
        DiversityReport report = minimal_representativeness_hsd(
            generated, table, matches, "gen", "t", GenerationSetting::IFT);
        CHECK(report.n <= table.n);
        CHECK(report.num_classes <= static_cast<int>(table.counts.size()));
    }
}
