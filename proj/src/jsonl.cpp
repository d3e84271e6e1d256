#include "epidiv/jsonl.hpp"

#include <sstream>

namespace epidiv {

namespace {

void put_optional(Json& j, const char* key, const std::optional<std::string>& value) {
    if (value.has_value()) j[key] = *value;
}

void put_optional(Json& j, const char* key, const std::optional<double>& value) {
    if (value.has_value()) j[key] = *value;
}

std::optional<std::string> opt_string(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

std::optional<double> opt_double(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

Json to_json(const Topic& topic) {
    Json j;
    j["id"] = topic.id;
    j["label"] = topic.label;
    put_optional(j, "country", topic.country);
    put_optional(j, "language", topic.language);
    return j;
}

Topic topic_from_json(const Json& j) {
    Topic t;
    t.id = j.at("id").get<std::string>();
    t.label = j.at("label").get<std::string>();
    t.country = opt_string(j, "country");
    t.language = opt_string(j, "language");
    return t;
}

Json to_json(const PromptTemplate& tmpl) {
    Json j;
    j["id"] = tmpl.id;
    j["template"] = tmpl.text;
    return j;
}

PromptTemplate template_from_json(const Json& j) {
    PromptTemplate t;
    t.id = j.at("id").get<std::string>();
    t.text = j.at("template").get<std::string>();
    return t;
}

Json to_json(const ResponseRef& ref) {
    Json j;
    j["generator_id"] = ref.generator_id;
    put_optional(j, "prompt_id", ref.prompt_id);
    j["setting"] = to_string(ref.setting);
    j["seed"] = ref.seed;
    return j;
}

ResponseRef response_ref_from_json(const Json& j) {
    ResponseRef ref;
    ref.generator_id = j.at("generator_id").get<std::string>();
    ref.prompt_id = opt_string(j, "prompt_id");
    ref.setting = setting_from_string(j.at("setting").get<std::string>());
    ref.seed = j.at("seed").get<uint64_t>();
    return ref;
}

Json to_json(const ResponseRecord& record) {
    Json j;
    j["generator_id"] = record.generator_id;
    j["topic_id"] = record.topic_id;
    put_optional(j, "prompt_id", record.prompt_id);
    j["setting"] = to_string(record.setting);
    j["text"] = record.text;
    j["context_ids"] = record.context_ids;
    j["seed"] = record.seed;
    j["created_at"] = record.created_at;
    return j;
}

ResponseRecord response_from_json(const Json& j) {
    ResponseRecord r;
    r.generator_id = j.at("generator_id").get<std::string>();
    r.topic_id = j.at("topic_id").get<std::string>();
    r.prompt_id = opt_string(j, "prompt_id");
    r.setting = setting_from_string(j.at("setting").get<std::string>());
    r.text = j.at("text").get<std::string>();
    r.context_ids = j.at("context_ids").get<std::vector<std::string>>();
    r.seed = j.at("seed").get<uint64_t>();
    r.created_at = j.at("created_at").get<std::string>();
    return r;
}

Json to_json(const Claim& claim) {
    Json j;
    j["id"] = claim.id;
    j["topic_id"] = claim.topic_id;
    j["response_ref"] = to_json(claim.response_ref);
    j["chunk_index"] = claim.chunk_index;
    j["text"] = claim.text;
    return j;
}

Claim claim_from_json(const Json& j) {
    Claim c;
    c.id = j.at("id").get<std::string>();
    c.topic_id = j.at("topic_id").get<std::string>();
    c.response_ref = response_ref_from_json(j.at("response_ref"));
    c.chunk_index = j.at("chunk_index").get<int>();
    c.text = j.at("text").get<std::string>();
    return c;
}

Json to_json(const DiversityReport& report) {
    Json j;
    j["generator_id"] = report.generator_id;
    j["topic_id"] = report.topic_id;
    j["setting"] = to_string(report.setting);
    j["n"] = report.n;
    j["num_classes"] = report.num_classes;
    j["f1"] = report.f1;
    j["f2"] = report.f2;
    j["coverage"] = report.coverage;
    j["hsd"] = report.hsd;
    put_optional(j, "ci_low", report.ci_low);
    put_optional(j, "ci_high", report.ci_high);
    put_optional(j, "rarefied_to_coverage", report.rarefied_to_coverage);
    if (!report.flags.empty()) j["flags"] = report.flags;
    return j;
}

DiversityReport diversity_report_from_json(const Json& j) {
    DiversityReport r;
    r.generator_id = j.at("generator_id").get<std::string>();
    r.topic_id = j.at("topic_id").get<std::string>();
    r.setting = setting_from_string(j.at("setting").get<std::string>());
    r.n = j.at("n").get<int64_t>();
    r.num_classes = j.at("num_classes").get<int>();
    r.f1 = j.at("f1").get<int64_t>();
    r.f2 = j.at("f2").get<int64_t>();
    r.coverage = j.at("coverage").get<double>();
    r.hsd = j.at("hsd").get<double>();
    r.ci_low = opt_double(j, "ci_low");
    r.ci_high = opt_double(j, "ci_high");
    r.rarefied_to_coverage = opt_double(j, "rarefied_to_coverage");
    if (j.contains("flags")) r.flags = j.at("flags").get<std::vector<std::string>>();
    return r;
}

Json to_json(const BackendDescriptor& backend) {
    Json j;
    j["kind"] = to_string(backend.kind);
    j["endpoint_url"] = backend.endpoint_url;
    j["model_name"] = backend.model_name;
    j["credential_env"] = backend.credential_env;
    j["max_in_flight"] = backend.max_in_flight;
    j["retry"] = Json{{"max_attempts", backend.retry.max_attempts},
                      {"base_backoff_ms", backend.retry.base_backoff_ms}};
    j["timeout_ms"] = backend.timeout_ms;
    if (backend.multilingual) j["multilingual"] = true;
    return j;
}

BackendDescriptor backend_from_json(const Json& j) {
    BackendDescriptor b;
    b.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    b.endpoint_url = j.at("endpoint_url").get<std::string>();
    b.model_name = j.value("model_name", std::string{});
    b.credential_env = j.value("credential_env", std::string{});
    b.max_in_flight = j.value("max_in_flight", 8);
    if (j.contains("retry")) {
        b.retry.max_attempts = j.at("retry").value("max_attempts", 5);
        b.retry.base_backoff_ms = j.at("retry").value("base_backoff_ms", 500);
    }
    b.timeout_ms = j.value("timeout_ms", 60000);
    b.multilingual = j.value("multilingual", false);
    return b;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append) : path_(path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) {
        throw EpidivError(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
}

void JsonlWriter::write(const Json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) {
        throw EpidivError(ErrorCode::IoError, "write failed on " + path_.string());
    }
    ++lines_written_;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::vector<Json> records;
    for_each_jsonl(path, [&](const Json& j) { records.push_back(j); });
    return records;
}

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const Json&)>& fn) {
    std::ifstream in(path);
    if (!in) {
        throw EpidivError(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (in.eof()) break;  // torn trailing line from a killed writer
            throw EpidivError(ErrorCode::IoError,
                              path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        fn(j);
    }
}

bool repair_jsonl_tail(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return false;
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    if (content.empty()) return false;
    size_t keep = content.size();
    if (content.back() != '\n') {
        size_t last_newline = content.find_last_of('\n');
        keep = (last_newline == std::string::npos) ? 0 : last_newline + 1;
    } else {
        return false;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(keep));
    return true;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw EpidivError(ErrorCode::IoError, "cannot open " + path.string());
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw EpidivError(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
    write_text_file(path, value.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
    return Json::parse(read_text_file(path));
}

}  // namespace epidiv
