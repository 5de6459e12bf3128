// Batch driver: load a scenario config, run the named pipeline, write the
// artifact directory. Exit 0 when every check passes, 2 when some check
// fails, 1 on errors (bad config, violated preconditions, IO).

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lipdyn/pipelines.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Lipschitz invariant manifolds, hyperbolicity certificates and connection graphs"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario config");
    std::string config_path;
    std::string out_dir = "artifacts";
    std::uint64_t seed_override = 0;
    bool check_only = false;
    run->add_option("config", config_path, "Scenario config (JSON)")->required();
    run->add_option("--out", out_dir, "Artifact directory (default: artifacts)");
    auto* seed_opt = run->add_option("--seed", seed_override, "Override seeds.main");
    run->add_flag("--check-only", check_only, "Validate the config and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "ConfigInvalid: cannot open '" << config_path << "'\n";
            return 1;
        }
        lipdyn::Json config;
        try {
            config = lipdyn::Json::parse(in);
        } catch (const lipdyn::Json::parse_error& e) {
            std::cerr << "ConfigInvalid: " << e.what() << "\n";
            return 1;
        }
        if (seed_opt->count() > 0) config["seeds"]["main"] = seed_override;
        lipdyn::validate_config(config);
        if (check_only) {
            std::cout << "config ok: pipeline '" << config.at("pipeline").get<std::string>()
                      << "'\n";
            return 0;
        }
        lipdyn::PipelineResult res = lipdyn::run_pipeline(config, out_dir);
        for (const auto& c : res.checks)
            std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name
                      << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
        std::cout << (res.all_pass() ? "all checks passed" : "some checks FAILED") << " ["
                  << res.checks.size() << " checks, artifacts in " << out_dir << "]\n";
        return res.all_pass() ? 0 : 2;
    } catch (const lipdyn::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "InternalError: " << e.what() << "\n";
        return 1;
    }
}
