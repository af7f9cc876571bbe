// craft: command-line front end (correlate, train, eval, hiphop, synth).
//
// Exit status: 0 success, 2 invalid arguments or configuration, 1 any
// other failure. Errors go to stderr as a JSON object.

#include "craft/correlation.hpp"
#include "craft/evaluation.hpp"
#include "craft/feature_table.hpp"
#include "craft/features.hpp"
#include "craft/learners.hpp"
#include "craft/model_io.hpp"
#include "craft/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Issue {
    std::string field;
    std::string message;
};

class UsageError : public std::exception {
public:
    explicit UsageError(std::vector<Issue> issues) : issues_(std::move(issues)) {}
    const std::vector<Issue>& issues() const { return issues_; }
    const char* what() const noexcept override { return "invalid arguments"; }

private:
    std::vector<Issue> issues_;
};

void report_usage(const std::vector<Issue>& issues)
{
    json list = json::array();
    for (const auto& i : issues) list.push_back({{"field", i.field}, {"message", i.message}});
    std::cerr << json{{"status", "invalid"}, {"errors", list}}.dump() << '\n';
}

void report_runtime(const std::string& message)
{
    std::cerr << json{{"status", "error"}, {"error", message}}.dump() << '\n';
}

// Flag values are kept as text and converted here so every failure can name
// its field.
class Args {
public:
    std::string& slot(const std::string& field) { return values_[field]; }
    void set_present(std::function<bool(const std::string&)> present) { present_ = std::move(present); }
    bool given(const std::string& field) const { return present_ && present_(field); }
    const std::string& text(const std::string& field) const { return values_.at(field); }

private:
    std::map<std::string, std::string> values_;
    std::function<bool(const std::string&)> present_;
};

template <typename T>
std::optional<T> parse_number(const std::string& text)
{
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) return std::nullopt;
    return value;
}

std::size_t to_count(const std::string& field, const std::string& text, std::vector<Issue>& issues)
{
    const auto v = parse_number<std::size_t>(text);
    if (!v) issues.push_back({field, "expected a nonnegative integer, got '" + text + "'"});
    return v.value_or(0);
}

double to_real(const std::string& field, const std::string& text, std::vector<Issue>& issues)
{
    const auto v = parse_number<double>(text);
    if (!v) issues.push_back({field, "expected a number, got '" + text + "'"});
    return v.value_or(0.0);
}

void require(const Args& args, const std::string& field, std::vector<Issue>& issues)
{
    if (!args.given(field) || args.text(field).empty()) issues.push_back({field, "is required"});
}

void throw_if(std::vector<Issue>& issues)
{
    if (!issues.empty()) throw UsageError(std::move(issues));
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    craft::write_file_atomic(path, text);
}

std::string format_real(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// ---------------------------------------------------------------- correlate

int run_correlate(const Args& args)
{
    std::vector<Issue> issues;
    require(args, "features", issues);
    require(args, "out", issues);
    const std::size_t r = to_count("r", args.text("r"), issues);
    if (r == 0 && issues.empty()) issues.push_back({"r", "must be >= 1"});
    throw_if(issues);

    const auto table = craft::load_feature_dir(args.text("features"));
    std::vector<craft::Matrix> views;
    for (auto& v : craft::split_views(table)) views.push_back(std::move(v.features));
    const craft::Matrix omega = craft::pairwise_correlations(views, r);

    std::string csv = "camera";
    for (Eigen::Index j = 0; j < omega.cols(); ++j) csv += "," + std::to_string(j);
    csv += "\n";
    for (Eigen::Index i = 0; i < omega.rows(); ++i) {
        csv += std::to_string(i);
        for (Eigen::Index j = 0; j < omega.cols(); ++j) csv += "," + format_real(omega(i, j));
        csv += "\n";
    }
    write_text(args.text("out"), csv);
    std::cout << csv;
    return 0;
}

// -------------------------------------------------------------------- train

const std::vector<std::string> kTrainFields = {"features", "model-out", "learner", "kernel", "rbf-gamma", "r",
                                               "eta-ridge", "lambda",    "dim",     "k1",     "k2",        "baseline",
                                               "pairing"};

// Effective text value of every train field: CLI flag, else config file,
// else built-in default (empty text means unset).
std::map<std::string, std::string> merge_train_fields(const Args& args, std::vector<Issue>& issues)
{
    std::map<std::string, std::string> out;
    for (const auto& f : kTrainFields) out[f] = args.text(f);

    if (args.given("config")) {
        json config;
        try {
            config = json::parse(craft::read_file(args.text("config")));
        } catch (const json::exception& e) {
            issues.push_back({"config", std::string("not valid JSON: ") + e.what()});
            return out;
        }
        if (!config.is_object()) {
            issues.push_back({"config", "must be a JSON object"});
            return out;
        }
        for (const auto& [key, value] : config.items()) {
            if (std::find(kTrainFields.begin(), kTrainFields.end(), key) == kTrainFields.end()) {
                issues.push_back({key, "unknown configuration key"});
                continue;
            }
            if (args.given(key)) continue;
            if (value.is_string()) {
                out[key] = value.get<std::string>();
            } else if (value.is_number_integer() || value.is_number_unsigned()) {
                out[key] = value.dump();
            } else if (value.is_number_float()) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", value.get<double>());
                out[key] = buf;
            } else if (value.is_null() && key == "dim") {
                out[key].clear();
            } else {
                issues.push_back({key, "unsupported value type in config"});
            }
        }
    }
    return out;
}

craft::TrainConfig build_train_config(const std::map<std::string, std::string>& v, std::vector<Issue>& issues)
{
    craft::TrainConfig c;
    if (auto l = craft::parse_learner_kind(v.at("learner"))) {
        c.learner = *l;
    } else {
        issues.push_back({"learner", "expected mfa or lda, got '" + v.at("learner") + "'"});
    }
    if (auto b = craft::parse_baseline(v.at("baseline"))) {
        c.baseline = *b;
    } else {
        issues.push_back({"baseline", "expected craft, zeropad, daume or orifeat, got '" + v.at("baseline") + "'"});
    }
    if (auto p = craft::parse_penalty_pairing(v.at("pairing"))) {
        c.pairing = *p;
    } else {
        issues.push_back({"pairing", "expected per_class or global, got '" + v.at("pairing") + "'"});
    }
    if (v.at("kernel") != "none") {
        c.kernel = craft::parse_kernel_kind(v.at("kernel"));
        if (!c.kernel) {
            issues.push_back({"kernel", "expected none, linear, bhattacharyya or rbf, got '" + v.at("kernel") + "'"});
        }
    }
    c.rbf_gamma = to_real("rbf-gamma", v.at("rbf-gamma"), issues);
    c.r = to_count("r", v.at("r"), issues);
    c.eta_ridge = to_real("eta-ridge", v.at("eta-ridge"), issues);
    c.lambda = to_real("lambda", v.at("lambda"), issues);
    if (!v.at("dim").empty()) c.dim = to_count("dim", v.at("dim"), issues);
    c.k1 = to_count("k1", v.at("k1"), issues);
    c.k2 = to_count("k2", v.at("k2"), issues);
    if (issues.empty()) {
        for (const auto& i : craft::validate_config(c)) issues.push_back({i.field, i.message});
    }
    return c;
}

int run_train(const Args& args)
{
    std::vector<Issue> issues;
    const auto fields = merge_train_fields(args, issues);
    if (fields.at("features").empty()) issues.push_back({"features", "is required"});
    if (fields.at("model-out").empty()) issues.push_back({"model-out", "is required"});
    const craft::TrainConfig config = build_train_config(fields, issues);
    // Range checks run before any data is read, so every bad field is reported at once.
    for (const auto& i : craft::validate_config(config)) {
        const bool already = std::any_of(issues.begin(), issues.end(), [&](const Issue& x) { return x.field == i.field; });
        if (!already) issues.push_back({i.field, i.message});
    }
    throw_if(issues);

    const auto table = craft::load_feature_dir(fields.at("features"));
    const auto views = craft::split_views(table);
    craft::CraftModel model;
    try {
        model = craft::train_craft(views, config);
    } catch (const craft::ConfigError& e) {
        std::vector<Issue> cfg;
        for (const auto& i : e.issues()) cfg.push_back({i.field, i.message});
        throw UsageError(std::move(cfg));
    }
    const fs::path out = fields.at("model-out");
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    craft::save_model(model, out);

    json summary{{"status", "ok"},
                 {"model", out.string()},
                 {"views", model.view_count},
                 {"block_dim", model.block_dim},
                 {"m", model.subspace_dim()},
                 {"penalty_shift", model.penalty_shift}};
    if (model.view_count == 2) summary["omega"] = model.omega(0, 1);
    std::cout << summary.dump() << '\n';
    return 0;
}

// --------------------------------------------------------------------- eval

int run_eval(const Args& args)
{
    std::vector<Issue> issues;
    for (const char* f : {"model", "probe", "gallery", "out"}) require(args, f, issues);
    const auto protocol = craft::parse_protocol(args.text("protocol"));
    if (!protocol) {
        issues.push_back({"protocol", "expected single, multishot or multiquery, got '" + args.text("protocol") + "'"});
    }
    throw_if(issues);

    const auto model = craft::load_model(args.text("model"));
    const auto probe = craft::load_feature_dir(args.text("probe"), craft::CameraIds::any);
    const auto gallery = craft::load_feature_dir(args.text("gallery"), craft::CameraIds::any);
    const auto result = craft::evaluate(model, probe, gallery, *protocol);

    const fs::path out = args.text("out");
    write_text(out, craft::encode_cmc_csv(result.curve));
    const fs::path summary_path = out.parent_path() / (out.stem().string() + "_summary.csv");
    const std::string summary = craft::encode_summary_csv(result);
    write_text(summary_path, summary);
    std::cout << summary;
    return 0;
}

// ------------------------------------------------------------------- hiphop

int run_hiphop(const Args& args)
{
    std::vector<Issue> issues;
    for (const char* f : {"conv1", "conv2", "out"}) require(args, f, issues);
    craft::DescriptorOptions options;
    options.kappa = to_count("kappa", args.text("kappa"), issues);
    options.strip_height = to_count("strip", args.text("strip"), issues);
    options.bins = to_count("bins", args.text("bins"), issues);
    if (issues.empty()) {
        if (options.kappa == 0) issues.push_back({"kappa", "must be >= 1"});
        if (options.strip_height == 0) issues.push_back({"strip", "must be >= 1"});
        if (options.bins == 0) issues.push_back({"bins", "must be >= 1"});
    }
    throw_if(issues);

    const auto conv1 = craft::load_fmp1(args.text("conv1"));
    const auto conv2 = craft::load_fmp1(args.text("conv2"));
    for (const auto* s : {&conv1, &conv2}) {
        const char* field = s == &conv1 ? "conv1" : "conv2";
        if (options.kappa > s->maps) {
            issues.push_back({"kappa", "exceeds the " + std::to_string(s->maps) + " maps of " + field});
        }
        if (options.strip_height > s->height) {
            issues.push_back({"strip", "exceeds the height " + std::to_string(s->height) + " of " + field});
        }
    }
    throw_if(issues);

    const craft::Vector v = craft::hiphop(conv1, conv2, options);
    write_text(args.text("out"), craft::encode_ftb1(v.cast<float>()));
    std::cout << json{{"status", "ok"}, {"dim", v.size()}}.dump() << '\n';
    return 0;
}

// -------------------------------------------------------------------- synth

int run_synth(const Args& args)
{
    std::vector<Issue> issues;
    require(args, "out", issues);
    craft::SyntheticSpec spec;
    spec.persons = to_count("persons", args.text("persons"), issues);
    spec.per_view = to_count("per-view", args.text("per-view"), issues);
    spec.views = to_count("views", args.text("views"), issues);
    spec.latent = to_count("latent", args.text("latent"), issues);
    spec.dim = to_count("dim", args.text("dim"), issues);
    spec.distortion = to_real("distortion", args.text("distortion"), issues);
    spec.noise = to_real("noise", args.text("noise"), issues);
    if (auto s = parse_number<std::uint64_t>(args.text("seed"))) {
        spec.seed = *s;
    } else {
        issues.push_back({"seed", "expected a nonnegative integer, got '" + args.text("seed") + "'"});
    }
    spec.train_fraction = to_real("train-fraction", args.text("train-fraction"), issues);
    if (issues.empty()) {
        for (const auto& i : craft::validate_spec(spec)) issues.push_back({i.field, i.message});
    }
    throw_if(issues);

    const auto table = craft::generate_synthetic(spec);
    const auto split = craft::split_synthetic(table, spec);
    const fs::path out = args.text("out");
    craft::save_feature_dir(split.train, out / "train");
    craft::save_feature_dir(split.probe, out / "probe", craft::CameraIds::any);
    craft::save_feature_dir(split.gallery, out / "gallery", craft::CameraIds::any);
    std::cout << json{{"status", "ok"},
                      {"train", split.train.size()},
                      {"probe", split.probe.size()},
                      {"gallery", split.gallery.size()}}
                     .dump()
              << '\n';
    return 0;
}

CLI::Option* add_text(CLI::App* app, Args& args, const std::string& field, const std::string& fallback,
                      const std::string& help)
{
    args.slot(field) = fallback;
    return app->add_option("--" + field, args.slot(field), help);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cross-view person re-identification toolkit"};
    app.require_subcommand(1);

    Args correlate_args, train_args, eval_args, hiphop_args, synth_args;

    auto* correlate = app.add_subcommand("correlate", "Estimate pairwise camera correlations");
    add_text(correlate, correlate_args, "features", "", "Feature directory (features.ftb + manifest.csv)");
    add_text(correlate, correlate_args, "r", "100", "Principal components per camera");
    add_text(correlate, correlate_args, "out", "", "Output CSV");

    auto* train = app.add_subcommand("train", "Train a model");
    add_text(train, train_args, "features", "", "Training feature directory");
    add_text(train, train_args, "learner", "mfa", "mfa | lda");
    add_text(train, train_args, "kernel", "none", "none | linear | bhattacharyya | rbf");
    add_text(train, train_args, "rbf-gamma", "1", "rbf kernel bandwidth");
    add_text(train, train_args, "r", "100", "Principal components for correlation estimation");
    add_text(train, train_args, "eta-ridge", "1", "Ridge strength inside the view-discrepancy regulariser");
    add_text(train, train_args, "lambda", "0.01", "Regularisation weight");
    add_text(train, train_args, "dim", "", "Subspace dimension (default min(block dim, #ids - 1))");
    add_text(train, train_args, "k1", "5", "Same-class neighbours in the intrinsic graph");
    add_text(train, train_args, "k2", "200", "Between-class pairs in the penalty graph");
    add_text(train, train_args, "baseline", "craft", "craft | zeropad | daume | orifeat");
    add_text(train, train_args, "pairing", "per_class", "Penalty pair selection: per_class | global");
    add_text(train, train_args, "model-out", "", "Model output path");
    add_text(train, train_args, "config", "", "JSON config; keys mirror flag names");

    auto* eval = app.add_subcommand("eval", "Evaluate a model on probe/gallery sets");
    add_text(eval, eval_args, "model", "", "Model file");
    add_text(eval, eval_args, "probe", "", "Probe feature directory");
    add_text(eval, eval_args, "gallery", "", "Gallery feature directory");
    add_text(eval, eval_args, "protocol", "single", "single | multishot | multiquery");
    add_text(eval, eval_args, "out", "", "CMC CSV; a <stem>_summary.csv is written next to it");

    auto* hip = app.add_subcommand("hiphop", "Build a HIPHOP descriptor from two FMP1 tensors");
    add_text(hip, hiphop_args, "conv1", "", "First-layer activations (FMP1)");
    add_text(hip, hiphop_args, "conv2", "", "Second-layer activations (FMP1)");
    add_text(hip, hiphop_args, "kappa", "20", "Ordinal slots");
    add_text(hip, hiphop_args, "strip", "5", "Strip height in rows");
    add_text(hip, hiphop_args, "bins", "16", "Intensity bins");
    add_text(hip, hiphop_args, "out", "", "Output vector (FTB1, one column)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-camera dataset");
    add_text(synth, synth_args, "persons", "100", "Identities");
    add_text(synth, synth_args, "per-view", "2", "Images per person per camera");
    add_text(synth, synth_args, "views", "2", "Cameras");
    add_text(synth, synth_args, "latent", "10", "Latent identity dimension");
    add_text(synth, synth_args, "dim", "20", "Observed feature dimension");
    add_text(synth, synth_args, "distortion", "0.5", "Per-camera distortion magnitude");
    add_text(synth, synth_args, "noise", "0.1", "Per-image noise level");
    add_text(synth, synth_args, "seed", "7", "Random seed");
    add_text(synth, synth_args, "train-fraction", "0.5", "Fraction of identities used for training");
    add_text(synth, synth_args, "out", "", "Output directory (train/, probe/, gallery/)");

    const std::pair<CLI::App*, Args*> commands[] = {
        {correlate, &correlate_args}, {train, &train_args}, {eval, &eval_args}, {hip, &hiphop_args}, {synth, &synth_args}};
    for (const auto& [cmd, args] : commands) {
        args->set_present([cmd = cmd](const std::string& field) { return cmd->count("--" + field) > 0; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_usage({{"arguments", e.what()}});
        return kExitUsage;
    }

    try {
        if (correlate->parsed()) return run_correlate(correlate_args);
        if (train->parsed()) return run_train(train_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (hip->parsed()) return run_hiphop(hiphop_args);
        if (synth->parsed()) return run_synth(synth_args);
    } catch (const UsageError& e) {
        report_usage(e.issues());
        return kExitUsage;
    } catch (const std::exception& e) {
        report_runtime(e.what());
        return kExitRuntime;
    }
    return kExitRuntime;
}
