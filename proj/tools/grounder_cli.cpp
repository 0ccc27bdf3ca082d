// grounder: evaluate, search, synth, rollouts, gen-views, score-rollouts, ablate.
//
// Settings resolve as flags > GROUNDER_<FLAG> environment variables > config
// file (--config or GROUNDER_CONFIG) > built-in defaults. Exit codes: 0 on
// success (including --help), 2 on usage or configuration errors, 1 on
// runtime failures.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "grounder/dataset.hpp"
#include "grounder/errors.hpp"
#include "grounder/format.hpp"
#include "grounder/harness.hpp"
#include "grounder/remote.hpp"
#include "grounder/reward.hpp"
#include "grounder/search.hpp"
#include "grounder/viewgen.hpp"
#include "json.hpp"

using namespace grounder;
using json = nlohmann::json;

namespace {

constexpr int kUsageExit = 2;
constexpr int kRuntimeExit = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Flag groups

struct SearchFlags {
    int n = 16;
    int m = 16;
    double temperature = 1.0;
    std::string roi = "840";
    double sigma = 0.01;
    int mean_shift_iters = 50;
    double mean_shift_tol = 1e-6;
    std::string strategy = "kde";
    bool union_vote = true;
    bool single_stage = false;
};

void add_search_flags(CLI::App& app, SearchFlags& f) {
    app.add_option("--n", f.n, "Initial samples N on the full image")->capture_default_str();
    app.add_option("--m", f.m, "Refinement samples M inside the crop")->capture_default_str();
    app.add_option("--temperature,-T", f.temperature, "Sampling temperature")->capture_default_str();
    app.add_option("--roi", f.roi, "Crop size: SIDE or WxH pixels")->capture_default_str();
    app.add_option("--sigma", f.sigma, "KDE variance in normalized units")->capture_default_str();
    app.add_option("--mean-shift-iters", f.mean_shift_iters, "Mean-shift iteration cap")
        ->capture_default_str();
    app.add_option("--mean-shift-tol", f.mean_shift_tol, "Mean-shift step tolerance (normalized)")
        ->capture_default_str();
    app.add_option("--strategy", f.strategy, "Vote aggregation: kde, center or medoid")
        ->capture_default_str();
    app.add_option("--union-vote", f.union_vote,
                   "Vote over initial and crop samples (false: crop samples only)")
        ->capture_default_str();
    app.add_flag("--single-stage", f.single_stage, "Aggregate N samples without the crop stage");
}

ImageDims parse_dims(const std::string& text, const std::string& what) {
    const auto x = text.find_first_of("xX");
    try {
        std::size_t used = 0;
        if (x == std::string::npos) {
            const auto side = std::stoll(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return {side, side};
        }
        const auto w = std::stoll(text.substr(0, x), &used);
        if (used != x) throw std::invalid_argument(text);
        const auto rest = text.substr(x + 1);
        const auto h = std::stoll(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        return {w, h};
    } catch (const std::logic_error&) {
        throw UsageError(what + " must be SIDE or WxH, got '" + text + "'");
    }
}

SearchConfig to_search_config(const SearchFlags& f) {
    SearchConfig cfg;
    cfg.n_initial = f.n;
    cfg.n_refine = f.m;
    cfg.temperature = f.temperature;
    cfg.roi_dims = parse_dims(f.roi, "--roi");
    cfg.kde.variance = f.sigma;
    cfg.kde.mean_shift_max_iters = f.mean_shift_iters;
    cfg.kde.mean_shift_tol = f.mean_shift_tol;
    const auto strategy = parse_strategy(f.strategy);
    if (!strategy) throw UsageError("unknown --strategy '" + f.strategy + "'");
    cfg.strategy = *strategy;
    cfg.union_vote = f.union_vote;
    validate(cfg);
    return cfg;
}

struct PredictorFlags {
    std::string kind = "sim";
    double noise = 0.02;
    double outlier_rate = 0.0;
    double distractor_rate = 0.0;
    double distractor_sigma = 0.0;
    double distractor_offset = 0.25;
    bool temperature_scaling = true;
    std::string endpoint;
    std::string model;
    double timeout_s = 60.0;
    int retries = 2;
    std::string prompt_template = "{instruction}";
    std::string response_pointer;
    int max_in_flight = 8;
};

void add_predictor_flags(CLI::App& app, PredictorFlags& f) {
    app.add_option("--predictor", f.kind, "sim or remote")
        ->check(CLI::IsMember({"sim", "remote"}))
        ->capture_default_str();
    auto* sim = "Simulated predictor";
    app.add_option("--noise", f.noise, "Noise std as a fraction of the frame's longer side")
        ->group(sim)
        ->capture_default_str();
    app.add_option("--outlier-rate", f.outlier_rate, "Share of uniform guesses")
        ->group(sim)
        ->capture_default_str();
    app.add_option("--distractor-rate", f.distractor_rate, "Share of samples near a distractor")
        ->group(sim)
        ->capture_default_str();
    app.add_option("--distractor-sigma", f.distractor_sigma,
                   "Distractor spread (0: same as --noise)")
        ->group(sim)
        ->capture_default_str();
    app.add_option("--distractor-offset", f.distractor_offset,
                   "Distractor distance from the target, fraction of the longer side")
        ->group(sim)
        ->capture_default_str();
    app.add_option("--temperature-scaling", f.temperature_scaling, "Scale noise with temperature")
        ->group(sim)
        ->capture_default_str();
    auto* remote = "Remote predictor (bearer token from GROUNDER_API_KEY)";
    app.add_option("--endpoint", f.endpoint, "Chat-completion URL")->group(remote);
    app.add_option("--model", f.model, "Model name sent with each request")->group(remote);
    app.add_option("--timeout", f.timeout_s, "Per-request timeout in seconds")
        ->group(remote)
        ->capture_default_str();
    app.add_option("--retries", f.retries, "Retries per request")->group(remote)->capture_default_str();
    app.add_option("--prompt-template", f.prompt_template, "Prompt with an {instruction} slot")
        ->group(remote)
        ->capture_default_str();
    app.add_option("--response-pointer", f.response_pointer,
                   "JSON pointer to the completion text in the response")
        ->group(remote);
    app.add_option("--max-in-flight", f.max_in_flight, "Concurrent requests per predictor")
        ->group(remote)
        ->capture_default_str();
}

std::unique_ptr<Predictor> make_predictor(const PredictorFlags& f, std::uint64_t seed,
                                          TargetLookup targets) {
    if (f.kind == "remote") {
        RemotePredictorConfig cfg;
        cfg.endpoint_url = f.endpoint;
        cfg.model_name = f.model;
        if (!(f.timeout_s > 0.0)) throw UsageError("--timeout must be positive");
        cfg.request_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(f.timeout_s * 1000.0));
        cfg.max_retries = f.retries;
        cfg.prompt_template = f.prompt_template;
        if (!f.response_pointer.empty()) cfg.response_pointer = f.response_pointer;
        cfg.max_in_flight = f.max_in_flight;
        if (cfg.model_name.empty()) throw UsageError("--model is required with --predictor remote");
        validate(cfg);
        return std::make_unique<RemotePredictor>(cfg);
    }
    SimPredictorConfig cfg;
    cfg.noise_sigma_frac = f.noise;
    cfg.outlier_rate = f.outlier_rate;
    cfg.distractor_rate = f.distractor_rate;
    cfg.distractor_sigma_frac = f.distractor_sigma;
    cfg.distractor_offset_frac = f.distractor_offset;
    cfg.temperature_scaling = f.temperature_scaling;
    cfg.rng_seed = seed;
    return std::make_unique<SimulatedPredictor>(cfg, std::move(targets));
}

TargetLookup lookup_in(const std::vector<EvalRecord>& records) {
    auto boxes = std::make_shared<std::map<std::string, BBox, std::less<>>>();
    for (const auto& r : records) (*boxes)[r.id] = r.gt;
    return [boxes](std::string_view id) -> std::optional<BBox> {
        const auto it = boxes->find(id);
        if (it == boxes->end()) return std::nullopt;
        return it->second;
    };
}

// ---------------------------------------------------------------------------
// I/O helpers

void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content << std::flush;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Unreadable("cannot open '" + path + "' for writing");
    out << content;
    if (!out.flush()) throw Unreadable("write error on '" + path + "'");
}

std::vector<EvalRecord> load_records(const std::string& path) {
    auto res = load_dataset(path);
    for (const auto& e : res.errors) {
        std::cerr << path << ":" << e.line << ": skipped: " << e.message << "\n";
    }
    return std::move(res.records);
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<Rollout> load_rollouts(const std::string& path, const TargetLookup& boxes) {
    std::ifstream in(path);
    if (!in) throw Unreadable("cannot open rollouts '" + path + "'");
    std::vector<Rollout> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = json::parse(line, nullptr, false);
        try {
            if (j.is_discarded()) throw std::invalid_argument("invalid JSON");
            std::optional<BBox> fallback;
            if (boxes && j.is_object() && j.contains("query_id") && j["query_id"].is_string()) {
                fallback = boxes(j["query_id"].get<std::string>());
            }
            out.push_back(rollout_from_json(j, fallback));
        } catch (const std::invalid_argument& e) {
            std::cerr << path << ":" << lineno << ": skipped: " << e.what() << "\n";
        }
    }
    return out;
}

std::string point_line(const PixelCoord& p) {
    return format_number(p.x) + " " + format_number(p.y) + "\n";
}

int default_jobs() {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------
// Layered settings: config file and environment become synthetic flags placed
// ahead of the user's own, and every option keeps its last value.

std::string env_name(const std::string& flag) {
    std::string out = "GROUNDER_";
    for (const char c : flag) {
        out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string json_scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    if (v.is_array()) {
        std::string out;
        for (const auto& item : v) {
            if (!out.empty()) out += ',';
            out += json_scalar(item, key);
        }
        return out;
    }
    throw UsageError("config key '" + key + "' must be a string, number, boolean or list");
}

std::vector<std::string> long_names(const CLI::App& app) {
    std::vector<std::string> out;
    for (const auto* opt : app.get_options()) {
        for (const auto& name : opt->get_lnames()) {
            if (name != "help" && name != "config") out.push_back(name);
        }
    }
    return out;
}

json load_config_file(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) {
        if (const char* env = std::getenv("GROUNDER_CONFIG"); env != nullptr) path = env;
    }
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    const auto j = json::parse(in, nullptr, false, true);
    if (j.is_discarded() || !j.is_object()) {
        throw UsageError("config file '" + path + "' is not a JSON object");
    }
    return j;
}

std::vector<std::string> layered_flags(const CLI::App& root, const CLI::App& sub, const json& file) {
    std::map<std::string, std::vector<std::string>> known;  // subcommand -> flags
    std::vector<std::string> all;
    for (const auto* s : root.get_subcommands([](const CLI::App*) { return true; })) {
        known[s->get_name()] = long_names(*s);
        all.insert(all.end(), known[s->get_name()].begin(), known[s->get_name()].end());
    }
    const auto has = [](const std::vector<std::string>& v, const std::string& k) {
        return std::find(v.begin(), v.end(), k) != v.end();
    };
    for (const auto& [key, value] : file.items()) {
        if (known.count(key) != 0) {
            if (!value.is_object()) throw UsageError("config section '" + key + "' must be an object");
            for (const auto& [inner, unused] : value.items()) {
                if (!has(known[key], inner)) {
                    throw UsageError("unknown config key '" + key + "." + inner + "'");
                }
            }
        } else if (!has(all, key)) {
            throw UsageError("unknown config key '" + key + "'");
        }
    }

    std::vector<std::string> out;
    const json section = file.contains(sub.get_name()) ? file[sub.get_name()] : json::object();
    for (const auto& name : long_names(sub)) {
        if (section.contains(name)) {
            out.push_back("--" + name + "=" + json_scalar(section[name], name));
        } else if (file.contains(name)) {
            out.push_back("--" + name + "=" + json_scalar(file[name], name));
        }
    }
    for (const auto& name : long_names(sub)) {
        if (const char* env = std::getenv(env_name(name).c_str()); env != nullptr && *env != '\0') {
            out.push_back("--" + name + "=" + env);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct EvaluateArgs {
    std::string dataset;
    std::string report = "report.json";
    std::string table;
    std::uint64_t seed = 0;
    int jobs = default_jobs();
    SearchFlags search;
    PredictorFlags predictor;
};

EvalOptions eval_options(const SearchFlags& s, std::uint64_t seed, int jobs) {
    EvalOptions opts;
    opts.mode = s.single_stage ? SearchMode::SingleStage : SearchMode::TwoStage;
    opts.search = to_search_config(s);
    opts.seed = seed;
    opts.jobs = jobs;
    if (jobs < 1) throw UsageError("--jobs must be at least 1");
    return opts;
}

int run_evaluate(const EvaluateArgs& a) {
    const auto opts = eval_options(a.search, a.seed, a.jobs);
    const auto records = load_records(a.dataset);
    auto predictor = make_predictor(a.predictor, a.seed, lookup_in(records));
    const auto report = evaluate(records, opts, *predictor);
    write_output(a.report, to_json(report).dump(2) + "\n");
    const auto table = format_table(report);
    if (!a.table.empty()) write_output(a.table, table);
    std::cout << table;
    return 0;
}

struct SearchArgs {
    std::string id = "query";
    std::string image;
    std::string instruction;
    std::string dims;
    std::string sim_gt;
    std::string trace;
    std::uint64_t seed = 0;
    SearchFlags search;
    PredictorFlags predictor;
};

int run_search(const SearchArgs& a) {
    const auto cfg = to_search_config(a.search);
    GroundingQuery q;
    q.id = a.id;
    q.image = a.image;
    q.instruction = a.instruction;

    TargetLookup targets;
    if (!a.sim_gt.empty()) {
        const auto parts = split_csv(a.sim_gt);
        std::vector<double> v;
        try {
            for (const auto& p : parts) v.push_back(std::stod(p));
        } catch (const std::logic_error&) {
            v.clear();
        }
        if (v.size() != 4) throw UsageError("--sim-gt must be x0,y0,x1,y1");
        const BBox gt{v[0], v[1], v[2], v[3]};
        if (!is_valid(gt)) throw UsageError("--sim-gt must satisfy x0 <= x1 and y0 <= y1");
        targets = [gt](std::string_view) { return std::optional<BBox>(gt); };
    } else if (a.predictor.kind == "sim") {
        throw UsageError("the sim predictor needs --sim-gt");
    }

    if (!a.dims.empty()) {
        q.dims = parse_dims(a.dims, "--dims");
    } else {
        q.dims = probe_image_dims(a.image);
    }
    if (!is_valid(q.dims)) throw UsageError("image dimensions must be positive");

    auto predictor = make_predictor(a.predictor, a.seed, targets);
    if (a.search.single_stage) {
        const auto p = single_stage_search(q, cfg.n_initial, cfg.temperature, cfg.strategy, cfg.kde,
                                           *predictor);
        if (!a.trace.empty()) {
            write_output(a.trace, json{{"mode", "single-stage"}, {"final", {p.x, p.y}}}.dump(2) + "\n");
        }
        std::cout << point_line(p);
        return 0;
    }
    const auto trace = two_stage_search(q, cfg, *predictor);
    if (!a.trace.empty()) write_output(a.trace, trace_to_json(trace).dump(2) + "\n");
    std::cout << point_line(trace.final_coord);
    return 0;
}

struct SynthArgs {
    std::size_t n = 500;
    std::uint64_t seed = 42;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    SynthBenchConfig cfg;
    cfg.n_records = a.n;
    cfg.rng_seed = a.seed;
    validate(cfg);
    const auto records = gen_synth_benchmark(cfg);
    std::string text;
    for (const auto& r : records) text += to_jsonl_line(to_json(r)) + "\n";
    write_output(a.out, text);
    std::cerr << "wrote " << records.size() << " records (seed " << a.seed << ")\n";
    return 0;
}

struct RolloutArgs {
    std::string dataset;
    std::string out = "-";
    int n = 16;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    PredictorFlags predictor;
};

int run_rollouts(const RolloutArgs& a) {
    if (a.n < 1) throw UsageError("--n must be at least 1");
    if (!(a.temperature >= 0.0)) throw UsageError("--temperature must be non-negative");
    const auto records = load_records(a.dataset);
    auto predictor = make_predictor(a.predictor, a.seed, lookup_in(records));
    std::string text;
    for (const auto& r : records) {
        for (const auto& slot : sample_predictions(r.query(), a.n, a.temperature, *predictor)) {
            text += to_jsonl_line(to_json(Rollout::from_raw(r.id, slot.raw, r.gt))) + "\n";
        }
    }
    write_output(a.out, text);
    return 0;
}

struct ViewArgs {
    std::string dataset;
    std::string rollouts;
    std::string out;
    std::string manifest;
    double max_area_frac = 0.3;
    int pairs = 1;
    std::uint64_t seed = 0;
    double sigma = 0.01;
};

int run_gen_views(const ViewArgs& a) {
    ViewGenConfig cfg;
    cfg.max_area_frac = a.max_area_frac;
    cfg.pairs_per_record = a.pairs;
    cfg.rng_seed = a.seed;
    cfg.kde.variance = a.sigma;
    validate(cfg);
    const auto records = load_records(a.dataset);
    std::map<std::string, std::vector<Rollout>> by_id;
    for (auto& r : load_rollouts(a.rollouts, lookup_in(records))) by_id[r.query_id].push_back(std::move(r));

    std::ostringstream buf;
    const auto stats = gen_consistency_dataset(records, by_id, cfg, buf);
    write_output(a.out, buf.str());
    auto manifest = to_json(stats);
    manifest["seed"] = a.seed;
    manifest["max_area_frac"] = a.max_area_frac;
    manifest["pairs_per_record"] = a.pairs;
    manifest["sigma"] = a.sigma;
    if (!a.manifest.empty()) write_output(a.manifest, manifest.dump(2) + "\n");
    std::cerr << "wrote " << stats.examples << " examples (" << stats.pairs << " pairs, "
              << stats.skipped_infeasible << " global-only, seed " << a.seed << ")\n";
    return 0;
}

struct ScoreArgs {
    std::string rollouts;
    std::string dataset;
    std::string out = "-";
    double lambda = 0.1;
};

int run_score(const ScoreArgs& a) {
    TargetLookup boxes;
    if (!a.dataset.empty()) boxes = lookup_in(load_records(a.dataset));
    const auto rollouts = load_rollouts(a.rollouts, boxes);
    std::string text;
    for (const auto& s : score_rollouts(rollouts, RewardConfig{a.lambda})) {
        text += to_jsonl_line(to_json(s)) + "\n";
    }
    write_output(a.out, text);
    return 0;
}

struct AblateArgs {
    std::string dataset;
    std::string axis;
    std::string values;
    std::string out = "-";
    std::uint64_t seed = 0;
    int jobs = default_jobs();
    SearchFlags search;
    PredictorFlags predictor;
};

int run_ablate(const AblateArgs& a) {
    const auto axis = parse_axis(a.axis);
    if (!axis) throw UsageError("unknown --axis '" + a.axis + "' (n, t, roi, strategy)");
    const auto values = split_csv(a.values);
    if (values.empty()) throw UsageError("--values needs at least one entry");
    const auto base = eval_options(a.search, a.seed, a.jobs);
    for (const auto& v : values) (void)apply_axis(base, *axis, v);
    const auto records = load_records(a.dataset);
    auto predictor = make_predictor(a.predictor, a.seed, lookup_in(records));
    write_output(a.out, ablation_csv(ablation_sweep(records, *axis, values, base, *predictor)));
    std::cerr << "ablation over " << to_string(*axis) << " (seed " << a.seed << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Test-time scaled GUI grounding: two-stage search, evaluation and data tools"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file; top-level keys mirror long flag names and an object "
                   "keyed by subcommand overrides them. Also GROUNDER_CONFIG");
    app.footer(
        "Precedence: flags > GROUNDER_<FLAG> environment variables (e.g. GROUNDER_N, "
        "GROUNDER_OUTLIER_RATE) > config file > defaults.");

    EvaluateArgs ev;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Grounding accuracy over a JSONL dataset");
    evaluate_cmd->add_option("--dataset", ev.dataset, "Dataset JSONL")->required();
    evaluate_cmd->add_option("--report", ev.report, "Report JSON path ('-' for stdout)")->capture_default_str();
    evaluate_cmd->add_option("--table", ev.table, "Also write the accuracy table here");
    evaluate_cmd->add_option("--seed", ev.seed, "Predictor seed, echoed in the report")->capture_default_str();
    evaluate_cmd->add_option("--jobs", ev.jobs, "Records in flight (capped by the predictor)");
    add_search_flags(*evaluate_cmd, ev.search);
    add_predictor_flags(*evaluate_cmd, ev.predictor);

    SearchArgs se;
    auto* search_cmd = app.add_subcommand("search", "Ground one instruction on one image; prints \"x y\"");
    search_cmd->add_option("--image", se.image, "Screenshot path")->required();
    search_cmd->add_option("--instruction", se.instruction, "Natural-language instruction")->required();
    search_cmd->add_option("--dims", se.dims, "Image size WxH (read from the file when omitted)");
    search_cmd->add_option("--sim-gt", se.sim_gt, "Target box x0,y0,x1,y1 for the sim predictor");
    search_cmd->add_option("--id", se.id, "Query id")->capture_default_str();
    search_cmd->add_option("--trace", se.trace, "Write the search trace JSON here");
    search_cmd->add_option("--seed", se.seed, "Predictor seed")->capture_default_str();
    add_search_flags(*search_cmd, se.search);
    add_predictor_flags(*search_cmd, se.predictor);

    SynthArgs sy;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic benchmark");
    synth_cmd->add_option("--n", sy.n, "Number of records")->capture_default_str();
    synth_cmd->add_option("--seed", sy.seed, "Corpus seed")->capture_default_str();
    synth_cmd->add_option("-o,--out", sy.out, "Output JSONL ('-' for stdout)")->required();

    RolloutArgs ro;
    auto* rollouts_cmd = app.add_subcommand("rollouts", "Sample rollouts for every record");
    rollouts_cmd->add_option("--dataset", ro.dataset, "Dataset JSONL")->required();
    rollouts_cmd->add_option("-o,--out", ro.out, "Output JSONL")->capture_default_str();
    rollouts_cmd->add_option("--n", ro.n, "Rollouts per record")->capture_default_str();
    rollouts_cmd->add_option("--temperature,-T", ro.temperature, "Sampling temperature")->capture_default_str();
    rollouts_cmd->add_option("--seed", ro.seed, "Predictor seed")->capture_default_str();
    add_predictor_flags(*rollouts_cmd, ro.predictor);

    ViewArgs vw;
    auto* views_cmd = app.add_subcommand("gen-views", "Global/local consistency training examples");
    views_cmd->add_option("--dataset", vw.dataset, "Dataset JSONL")->required();
    views_cmd->add_option("--rollouts", vw.rollouts, "Rollout JSONL {query_id, raw[, bbox]}")->required();
    views_cmd->add_option("-o,--out", vw.out, "Output JSONL")->required();
    views_cmd->add_option("--manifest", vw.manifest, "Write counts and settings JSON here");
    views_cmd->add_option("--max-area-frac", vw.max_area_frac, "Largest crop area fraction")->capture_default_str();
    views_cmd->add_option("--pairs", vw.pairs, "View pairs per record")->capture_default_str();
    views_cmd->add_option("--seed", vw.seed, "Crop seed")->capture_default_str();
    views_cmd->add_option("--sigma", vw.sigma, "KDE variance for picking the reasoning source")
        ->capture_default_str();

    ScoreArgs sc;
    auto* score_cmd = app.add_subcommand("score-rollouts", "Rewards and group advantages for rollouts");
    score_cmd->add_option("--rollouts", sc.rollouts, "Rollout JSONL {query_id, raw[, bbox]}")->required();
    score_cmd->add_option("--dataset", sc.dataset, "Supplies boxes for rollouts without one");
    score_cmd->add_option("-o,--out", sc.out, "Output JSONL")->capture_default_str();
    score_cmd->add_option("--lambda", sc.lambda, "Format reward weight")->capture_default_str();

    AblateArgs ab;
    auto* ablate_cmd = app.add_subcommand("ablate", "Accuracy along one hyperparameter; prints CSV");
    ablate_cmd->add_option("--dataset", ab.dataset, "Dataset JSONL")->required();
    ablate_cmd->add_option("--axis", ab.axis, "n, t, roi or strategy")->required();
    ablate_cmd->add_option("--values", ab.values, "Comma-separated values, e.g. 1,4,16")->required();
    ablate_cmd->add_option("-o,--out", ab.out, "Output CSV")->capture_default_str();
    ablate_cmd->add_option("--seed", ab.seed, "Predictor seed")->capture_default_str();
    ablate_cmd->add_option("--jobs", ab.jobs, "Records in flight (capped by the predictor)");
    add_search_flags(*ablate_cmd, ab.search);
    add_predictor_flags(*ablate_cmd, ab.predictor);

    std::vector<std::string> args(argv + 1, argv + argc);
    CLI::App* active = nullptr;
    try {
        const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
        auto pos = args.end();
        for (auto it = args.begin(); it != args.end() && active == nullptr; ++it) {
            for (auto* s : subs) {
                if (*it == s->get_name()) {
                    active = s;
                    pos = it;
                    break;
                }
            }
        }
        if (active != nullptr) {
            const auto extra = layered_flags(app, *active, load_config_file(args));
            args.insert(pos + 1, extra.begin(), extra.end());
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code == 0) return 0;
        if (active != nullptr) std::cerr << "\n" << active->help();
        return kUsageExit;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageExit;
    }

    try {
        if (*evaluate_cmd) return run_evaluate(ev);
        if (*search_cmd) return run_search(se);
        if (*synth_cmd) return run_synth(sy);
        if (*rollouts_cmd) return run_rollouts(ro);
        if (*views_cmd) return run_gen_views(vw);
        if (*score_cmd) return run_score(sc);
        if (*ablate_cmd) return run_ablate(ab);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageExit;
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeExit;
    }
    return kUsageExit;
}
