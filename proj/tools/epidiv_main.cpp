#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "epidiv/commands.hpp"
#include "epidiv/version.hpp"

namespace {

struct CliArgs {
    std::string manifest_path;
    epidiv::CommandOptions options;
};

void add_common(CLI::App* cmd, CliArgs& args, bool needs_manifest = true) {
    auto* manifest = cmd->add_option("--manifest", args.manifest_path, "run manifest JSON file");
    if (needs_manifest) manifest->required();
    cmd->add_option_function<uint64_t>(
        "--stage-seed", [&args](uint64_t v) { args.options.stage_seed = v; },
        "override the run seed for this stage");
    cmd->add_flag("--resume", args.options.resume,
                  "skip completed work on rerun (default behaviour)");
    cmd->add_option_function<std::string>(
        "--similarity-floor",
        [&args](const std::string& v) { args.options.similarity_floor = v; },
        "RAG similarity floor: a number, or 'auto' to use the corpus mean");
    cmd->add_option_function<std::string>(
        "--decomp-prompt", [&args](const std::string& v) { args.options.decomp_prompt = v; },
        "decomposition prompt (P1, P2 or P3)")
        ->check(CLI::IsMember({"P1", "P2", "P3"}));
    cmd->add_flag("--quiet", args.options.quiet, "suppress summary output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"epistemic-diversity measurement pipeline"};
    app.set_version_flag("--version", std::string("epidiv ") + epidiv::kToolVersion +
                                          " (schema v" + epidiv::kSchemaVersion + ")");
    app.require_subcommand(1);

    CliArgs args;
    using Command = int (*)(const epidiv::RunManifest&, const epidiv::CommandOptions&);
    struct Sub {
        const char* name;
        const char* help;
        Command run;
    };
    const Sub subs[] = {
        {"generate", "sample responses from every (generator, topic, template) cell",
         &epidiv::cmd_generate},
        {"decompose", "decompose responses into atomic claims", &epidiv::cmd_decompose},
        {"cluster", "cluster claims into meaning classes", &epidiv::cmd_cluster},
        {"diversity", "compute coverage, rarefaction and Hill-Shannon diversity",
         &epidiv::cmd_diversity},
        {"compare", "Jensen-Shannon divergence between generators", &epidiv::cmd_compare},
        {"represent", "match claims against reference corpora", &epidiv::cmd_represent},
        {"simulate", "emit a synthetic claim corpus with known diversity",
         &epidiv::cmd_simulate},
        {"report", "emit CSV/JSON report bundle from checkpoints", &epidiv::cmd_report},
    };

    Command selected = nullptr;
    for (const Sub& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        add_common(cmd, args);
        cmd->callback([&selected, run = sub.run] { selected = run; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        epidiv::RunManifest manifest = epidiv::load_manifest(args.manifest_path);
        return selected(manifest, args.options);
    } catch (const epidiv::EpidivError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == epidiv::ErrorCode::ConfigError ? epidiv::kExitConfigError
                                                          : epidiv::kExitPartialFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return epidiv::kExitPartialFailure;
    }
}
