// Command-line front end for the footprint-analysis toolkit.
//
// Subcommands:
//   gen         expand a scenario (JSON file or named preset) into events
//   fit         fit a baseline model from a benign-only event stream
//   detect      run windowed detection over events with a fitted model
//   eval        score verdicts against ground truth
//   experiment  run a canned multi-seed study and write report.json/.csv
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cryptoprint/cryptoprint.hpp"

namespace {

using namespace cryptoprint;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t at = 0;
    while (at < text.size()) {
        const auto comma = text.find(',', at);
        const auto token = text.substr(at, comma == std::string::npos ? comma : comma - at);
        if (token.empty()) throw InvalidConfig("seeds", "empty seed entry");
        std::size_t used = 0;
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(token, &used);
        } catch (const std::exception&) {
            throw InvalidConfig("seeds", "'" + token + "' is not an unsigned integer");
        }
        if (used != token.size()) {
            throw InvalidConfig("seeds", "'" + token + "' is not an unsigned integer");
        }
        seeds.push_back(seed);
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    if (seeds.empty()) throw InvalidConfig("seeds", "need at least one seed");
    return seeds;
}

bool is_preset_name(const std::string& scenario) {
    for (const auto name : synth::kScenarioPresetNames) {
        if (name == scenario) return true;
    }
    return false;
}

// `scenario` is either a preset name or a config file path; preset names win.
int run_gen(const std::string& scenario, const std::string& variant, std::uint64_t seed,
            bool seed_given, const std::string& out_path) {
    synth::ScenarioConfig config;
    if (is_preset_name(scenario)) {
        auto variants = synth::preset_scenarios(scenario);
        if (variants.size() > 1 && variant.empty()) {
            std::string labels;
            for (const auto& v : variants) {
                if (!labels.empty()) labels += ", ";
                labels += v.label;
            }
            throw InvalidConfig("variant", "preset '" + scenario +
                                               "' has variants [" + labels +
                                               "]; pick one with --variant");
        }
        bool found = false;
        for (auto& v : variants) {
            if (variant.empty() || v.label == variant) {
                config = std::move(v.config);
                found = true;
                break;
            }
        }
        if (!found) {
            throw InvalidConfig("variant", "preset '" + scenario + "' has no variant '" +
                                               variant + "'");
        }
    } else {
        config = synth::load_scenario(scenario);
    }
    if (seed_given) config.seed = seed;
    const auto events = synth::generate_scenario(config);
    write_events_file(out_path, events);
    std::cout << "wrote " << events.size() << " events to " << out_path << "\n";
    return 0;
}

int run_fit(const std::string& events_path, const std::string& out_path,
            std::int64_t window_ms, std::uint64_t block_size) {
    const auto events = read_events_file(events_path);
    for (const auto& event : events) {
        if (!event.truth.has_value()) {
            throw MissingTruth("event " + std::to_string(event.event_id) +
                               " has no ground truth; fitting needs labeled benign data");
        }
        if (event.truth->label != TruthLabel::Benign) {
            throw MixedLabels("event " + std::to_string(event.event_id) +
                              " is labeled malicious; fitting needs benign-only data");
        }
    }
    FeatureConfig config;
    config.window_ms = window_ms;
    config.block_size_bytes = block_size;
    const auto model = exp::fit_from_stream(events, config, 1.0);
    write_text_file(out_path, save_model(model));
    std::cout << "fitted baseline from " << events.size() << " events -> " << out_path
              << "\n";
    return 0;
}

int run_detect(const std::string& events_path, const std::string& model_path,
               const std::string& out_path, double theta, double cut,
               std::int64_t window_ms, bool feedback, double eta, double fpr_target) {
    const auto events = read_events_file(events_path);
    const auto model = load_model(read_text_file(model_path));
    DetectorConfig config;
    config.features.window_ms = window_ms;
    config.cut_distance = cut;
    config.initial_theta = theta;
    config.feedback = feedback;
    config.eta = eta;
    config.fpr_target = fpr_target;
    const auto result = detect_stream(events, model, config);
    write_verdicts_file(out_path, result.verdicts);
    std::cout << "wrote " << result.verdicts.size() << " verdicts (" << result.window_count
              << " windows, " << result.skipped.size() << " events skipped, final theta "
              << result.threshold.theta << ") to " << out_path << "\n";
    return 0;
}

int run_eval(const std::string& verdicts_path, const std::string& events_path,
             const std::string& out_path, const std::string& format, bool percent,
             bool include_latency) {
    const auto verdicts = read_verdicts_file(verdicts_path);
    const auto events = read_events_file(events_path);
    const auto report = eval::compute_metrics_report(verdicts, events);
    if (format == "csv") {
        write_text_file(out_path, eval::metrics_report_to_csv(report, percent));
    } else {
        auto doc = eval::metrics_report_to_json(report);
        if (include_latency) {
            doc["latency"] = eval::latency_report_to_json(
                eval::compute_latency_report(verdicts, events));
        }
        write_text_file(out_path, doc.dump(2) + "\n");
    }
    std::cout << "wrote metrics report to " << out_path << "\n";
    return 0;
}

int run_experiment(const std::string& kind_token, const std::string& seeds_text,
                   const std::string& out_dir) {
    const auto kind = exp::parse_experiment_kind(kind_token);
    const auto seeds = parse_seed_list(seeds_text);
    const auto report = exp::run_experiment(kind, seeds);
    exp::write_report(report, out_dir);
    std::cout << "wrote " << out_dir << "/report.json and " << out_dir << "/report.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"footprint-analysis toolkit"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "expand a scenario into a labeled event stream");
    std::string gen_scenario;
    std::string gen_variant;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--scenario", gen_scenario,
                    "scenario: preset name (baseline, key-length-sweep, file-type-fpr, "
                    "latency-sweep, multifamily, entropy-dist, scaling) or config JSON path")
        ->required();
    gen->add_option("--variant", gen_variant, "variant label for sweep presets");
    auto* seed_opt = gen->add_option("--seed", gen_seed, "override the scenario seed");
    gen->add_option("--out", gen_out, "output events file (JSON lines)")->required();

    auto* fit = app.add_subcommand("fit", "fit a baseline model from benign events");
    std::string fit_events;
    std::string fit_out;
    std::int64_t fit_window_ms = 2000;
    std::uint64_t fit_block = 4096;
    fit->add_option("--events", fit_events, "benign-only events file")->required();
    fit->add_option("--out", fit_out, "output model JSON path")->required();
    fit->add_option("--window-ms", fit_window_ms, "aggregation window (ms)");
    fit->add_option("--block-size", fit_block, "entropy block size (bytes)");

    auto* detect = app.add_subcommand("detect", "run detection over an event stream");
    std::string detect_events;
    std::string detect_model;
    std::string detect_out;
    double detect_theta = kDefaultTheta;
    double detect_cut = kDefaultCutDistance;
    std::int64_t detect_window_ms = 2000;
    bool detect_feedback = false;
    double detect_eta = kDefaultEta;
    double detect_fpr_target = kDefaultFprTarget;
    detect->add_option("--events", detect_events, "events file (JSON lines)")->required();
    detect->add_option("--model", detect_model, "fitted model JSON")->required();
    detect->add_option("--out", detect_out, "output verdicts file")->required();
    detect->add_option("--theta", detect_theta, "initial decision threshold");
    detect->add_option("--cut", detect_cut, "dendrogram cut distance");
    detect->add_option("--window-ms", detect_window_ms, "aggregation window (ms)");
    detect->add_flag("--feedback", detect_feedback, "enable threshold feedback");
    detect->add_option("--eta", detect_eta, "feedback learning rate");
    detect->add_option("--fpr-target", detect_fpr_target, "feedback FPR target");

    auto* eval_cmd = app.add_subcommand("eval", "score verdicts against ground truth");
    std::string eval_verdicts;
    std::string eval_events;
    std::string eval_out;
    std::string eval_format = "json";
    bool eval_percent = false;
    bool eval_latency = false;
    eval_cmd->add_option("--verdicts", eval_verdicts, "verdicts file")->required();
    eval_cmd->add_option("--events", eval_events, "events file with ground truth")
        ->required();
    eval_cmd->add_option("--out", eval_out, "output report path")->required();
    eval_cmd->add_option("--format", eval_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    eval_cmd->add_flag("--percent", eval_percent, "CSV values as percentages");
    eval_cmd->add_flag("--latency", eval_latency, "include latency stats (JSON)");

    auto* experiment = app.add_subcommand("experiment", "run a canned multi-seed study");
    std::string exp_kind;
    std::string exp_seeds = "1,2,3,4,5";
    std::string exp_out;
    experiment
        ->add_option("--kind", exp_kind,
                     "one of key_length, file_type, latency, multifamily, entropy_dist, "
                     "scaling")
        ->required();
    experiment->add_option("--seeds", exp_seeds, "comma-separated seed list");
    experiment->add_option("--out", exp_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            return run_gen(gen_scenario, gen_variant, gen_seed, seed_opt->count() > 0,
                           gen_out);
        }
        if (fit->parsed()) return run_fit(fit_events, fit_out, fit_window_ms, fit_block);
        if (detect->parsed()) {
            return run_detect(detect_events, detect_model, detect_out, detect_theta,
                              detect_cut, detect_window_ms, detect_feedback, detect_eta,
                              detect_fpr_target);
        }
        if (eval_cmd->parsed()) {
            return run_eval(eval_verdicts, eval_events, eval_out, eval_format, eval_percent,
                            eval_latency);
        }
        if (experiment->parsed()) return run_experiment(exp_kind, exp_seeds, exp_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
