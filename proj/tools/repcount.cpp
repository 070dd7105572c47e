// Command-line front end: synth, validate, train, count, eval, compare.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "repcount/data_io.hpp"
#include "repcount/errors.hpp"
#include "repcount/metrics_eval.hpp"
#include "repcount/pipeline.hpp"
#include "repcount/synth.hpp"

namespace fs = std::filesystem;
using namespace repcount;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitParse = 2;
constexpr int kExitEval = 3;
constexpr int kExitTrain = 4;

// Raised by a command to pick an exit status other than the default for the
// wrapped error code.
struct CommandFailure {
    Error error;
    int exit_code;
    std::string file;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::WrongLandmarkCount:
        case ErrorCode::NonMonotonicFrameIndex:
        case ErrorCode::DuplicateVideoId:
            return kExitParse;
        case ErrorCode::MissingPrediction:
        case ErrorCode::DuplicatePrediction:
        case ErrorCode::ZeroGroundTruth:
        case ErrorCode::StaleCorrection:
            return kExitEval;
        case ErrorCode::NonFiniteLoss:
        case ErrorCode::MixedModes:
        case ErrorCode::BadLabel:
            return kExitTrain;
        default:
            return kExitOther;
    }
}

void report_error(const std::string& command, const Error& e, int exit_code, const std::string& file = {}) {
    nlohmann::ordered_json rec;
    rec["error"] = to_string(e.code());
    rec["command"] = command;
    if (!file.empty()) rec["file"] = file;
    rec["message"] = e.what();
    if (!e.subject().empty()) rec["subject"] = e.subject();
    if (e.line() > 0) rec["line"] = e.line();
    rec["exit"] = exit_code;
    std::cerr << rec.dump() << '\n';
}

std::vector<fs::path> landmark_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const std::string& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file() && entry.path().extension() == ".lmjsonl") found.push_back(entry.path());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<VideoAnnotation> load_annotations(const fs::path& path) {
    std::istringstream in(read_file(path));
    return parse_annotations(in);
}

CorrectionLedger load_ledger(const std::string& path) {
    if (path.empty()) return {};
    std::istringstream in(read_file(path));
    return parse_ledger(in, fs::path(path).stem().string());
}

std::vector<Prediction> load_predictions(const fs::path& path) {
    std::istringstream in(read_file(path));
    return parse_predictions(in);
}

template <typename Writer>
void write_atomic(const fs::path& path, Writer&& writer) {
    std::ostringstream out;
    writer(out);
    write_file_atomic(path, out.str());
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw Error(ErrorCode::BadConfig, "hidden sizes must be positive integers: '" + text + "'");
        }
    }
    return out;
}

std::pair<std::string, std::string> split_pair(const std::string& text, char sep, const char* what) {
    const std::size_t at = text.find(sep);
    if (at == std::string::npos || at == 0 || at + 1 == text.size()) {
        throw Error(ErrorCode::BadConfig, std::string("expected ") + what + ", got '" + text + "'");
    }
    return {text.substr(0, at), text.substr(at + 1)};
}

double to_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::BadConfig, std::string("bad number for ") + what + ": '" + s + "'");
}

Joint parse_joint(const std::string& name) {
    for (Joint j : kJoints) {
        if (to_string(j) == name) return j;
    }
    throw Error(ErrorCode::BadConfig, "unknown joint '" + name + "'");
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
    std::string template_name = "squat";
    int reps = 3;
    int period = 30;
    double noise = 0.0;
    std::vector<std::string> yaw;
    std::string incomplete;
    bool sub_action = false;
    int videos = 1;
    std::uint64_t seed = 0;
    std::string id;
    std::string out_dir = ".";
};

int run_synth(const SynthArgs& a) {
    SynthSpec base;
    base.action_template = parse_action_template(a.template_name);
    base.n_reps = a.reps;
    base.period_frames = a.period;
    base.noise_std = a.noise;
    base.sub_action_at_end = a.sub_action;
    for (const std::string& y : a.yaw) {
        const auto [frame, deg] = split_pair(y, ':', "FRAME:DEGREES");
        base.camera_yaw_schedule.push_back({static_cast<long>(to_double(frame, "yaw frame")), to_double(deg, "yaw")});
    }
    if (!a.incomplete.empty()) {
        const auto [rep, frac] = split_pair(a.incomplete, ':', "REP:FRACTION");
        base.incomplete_rep_at =
            IncompleteRep{static_cast<int>(to_double(rep, "rep index")), to_double(frac, "fraction")};
    }
    if (a.videos < 1) throw Error(ErrorCode::BadSpec, "--videos must be >= 1");

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    const std::string prefix = a.id.empty() ? a.template_name : a.id;
    std::vector<VideoAnnotation> annotations;
    for (int k = 0; k < a.videos; ++k) {
        SynthSpec spec = base;
        spec.seed = a.seed + static_cast<std::uint64_t>(k);
        spec.video_id = a.videos == 1 ? prefix : prefix + "_" + std::to_string(k);
        const SynthOutput out = synthesize(spec);
        write_atomic(dir / (spec.video_id + ".lmjsonl"), [&](std::ostream& os) { write_landmarks(os, out.frames); });
        annotations.push_back(out.annotation);
        std::cout << spec.video_id << " frames=" << out.frames.size() << " true_count=" << out.true_count << '\n';
    }
    write_atomic(dir / "annotations.csv", [&](std::ostream& os) { write_annotations(os, annotations); });
    return kExitOk;
}

// --- validate ---------------------------------------------------------------

struct ValidateArgs {
    std::vector<std::string> landmarks;
    std::string annotations;
    std::string ledger;
};

int run_validate(const ValidateArgs& a) {
    for (const fs::path& p : landmark_files(a.landmarks)) {
        try {
            const LandmarkSequence seq = load_landmarks(p);
            std::cout << "ok " << p.string() << " frames=" << seq.frames.size() << '\n';
        } catch (const Error& e) {
            throw CommandFailure{e, exit_code_for(e.code()), p.string()};
        }
    }
    if (!a.annotations.empty()) {
        std::cout << "ok " << a.annotations << " videos=" << load_annotations(a.annotations).size() << '\n';
    }
    if (!a.ledger.empty()) {
        std::cout << "ok " << a.ledger << " entries=" << load_ledger(a.ledger).entries.size() << '\n';
    }
    return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
    std::string annotations;
    std::vector<std::string> landmarks;
    std::string mode = "avg5";
    std::string model;
    int epochs = 100;
    double lr = 0.05;
    std::size_t batch = 16;
    std::string hidden = "64,32";
    std::uint64_t seed = 0;
};

std::map<std::string, LandmarkSequence> load_by_id(const std::vector<std::string>& inputs) {
    std::map<std::string, LandmarkSequence> out;
    for (const fs::path& p : landmark_files(inputs)) {
        LandmarkSequence seq = load_landmarks(p);
        const std::string id = seq.video_id;
        if (!out.emplace(id, std::move(seq)).second) {
            throw Error(ErrorCode::DuplicateVideoId, "two landmark files share a video id", id);
        }
    }
    return out;
}

int run_train(const TrainArgs& a) {
    const FeatureMode mode = parse_feature_mode(a.mode);
    const std::vector<VideoAnnotation> annotations = load_annotations(a.annotations);
    const std::map<std::string, LandmarkSequence> clips = load_by_id(a.landmarks);

    std::vector<LabeledPose> data;
    for (const VideoAnnotation& ann : annotations) {
        const auto it = clips.find(ann.video_id);
        if (it == clips.end()) throw Error(ErrorCode::IoFailure, "no landmark file for annotated video", ann.video_id);
        const std::vector<LabeledPose> poses = labeled_poses(it->second.frames, ann, mode);
        data.insert(data.end(), poses.begin(), poses.end());
    }

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch;
    cfg.seed = a.seed;
    cfg.hidden = parse_sizes(a.hidden);
    std::vector<double> history;
    ScorerModel model;
    try {
        model = train(data, cfg, &history);
    } catch (const Error& e) {
        throw CommandFailure{e, kExitTrain, {}};
    }
    write_atomic(a.model, [&](std::ostream& os) { write_model(os, model); });
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", history.back());
    std::cout << "trained mode=" << to_string(mode) << " examples=" << data.size() << " epochs=" << cfg.epochs
              << " final_loss=" << buf << '\n';
    return kExitOk;
}

// --- count ------------------------------------------------------------------

struct CountArgs {
    std::vector<std::string> landmarks;
    std::string annotations;
    std::string action;
    std::string model;
    std::string mode;
    std::string rule;
    double upper = 0.8;
    double lower = 0.2;
    int smooth = 3;
    std::string order = "I-II";
    std::string out_dir = ".";
};

GeometricRule rule_for(const CountArgs& a, const std::string& action) {
    if (!a.rule.empty()) {
        std::stringstream ss(a.rule);
        std::string joint, one, two;
        if (!std::getline(ss, joint, ':') || !std::getline(ss, one, ':') || !std::getline(ss, two)) {
            throw Error(ErrorCode::BadConfig, "--rule expects JOINT:POSE_I_DEG:POSE_II_DEG");
        }
        return {parse_joint(joint), to_double(one, "rule"), to_double(two, "rule")};
    }
    return template_rule(parse_action_template(action));
}

int run_count(const CountArgs& a) {
    TriggerConfig trigger;
    trigger.upper = a.upper;
    trigger.lower = a.lower;
    trigger.smoothing_window = a.smooth;
    if (a.order == "I-II") {
        trigger.order = TriggerOrder::PoseIThenII;
    } else if (a.order == "II-I") {
        trigger.order = TriggerOrder::PoseIIThenI;
    } else {
        throw Error(ErrorCode::BadConfig, "--order must be I-II or II-I");
    }
    trigger.validate();

    std::optional<ScorerModel> model;
    if (!a.model.empty()) {
        std::istringstream in(read_file(a.model));
        model = read_model(in);
        if (!a.mode.empty() && parse_feature_mode(a.mode) != model->mode) {
            throw Error(ErrorCode::ModeMismatch, "model was trained with mode " + std::string(to_string(model->mode)),
                        a.mode);
        }
    }

    std::map<std::string, std::string> action_of;
    if (!a.annotations.empty()) {
        for (const VideoAnnotation& ann : load_annotations(a.annotations)) action_of[ann.video_id] = ann.action;
    }

    const fs::path dir(a.out_dir);
    fs::create_directories(dir / "density");
    std::vector<CountRow> rows;
    for (const fs::path& p : landmark_files(a.landmarks)) {
        const LandmarkSequence seq = load_landmarks(p);
        std::string action = a.action;
        if (const auto it = action_of.find(seq.video_id); it != action_of.end()) action = it->second;
        if (action.empty()) throw Error(ErrorCode::BadConfig, "no action for video (use --action)", seq.video_id);

        const FrameScorer scorer = model ? model_scorer(*model, action) : geometric_scorer(rule_for(a, action));
        const DensityMap map = build_density_map(seq.frames, scorer, seq.video_id, action);
        write_atomic(dir / "density" / (seq.video_id + ".csv"), [&](std::ostream& os) { write_density_csv(os, map); });
        rows.push_back({seq.video_id, action, count_reps(map, trigger)});
        std::cout << seq.video_id << " count=" << rows.back().result.count << '\n';
    }
    write_atomic(dir / "counts.csv", [&](std::ostream& os) { write_counts(os, rows); });
    return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string annotations;
    std::string predictions;
    std::string ledger;
    std::string mode;
    std::string out_dir = ".";
};

EvalReport evaluate_files(const std::string& annotations, const std::string& predictions, const std::string& ledger) {
    const CorrectionLedger l = load_ledger(ledger);
    const std::vector<VideoAnnotation> anns = load_annotations(annotations);
    const std::vector<Prediction> preds = load_predictions(predictions);
    try {
        EvalReport report = evaluate(apply_corrections(anns, l), preds);
        report.ledger = l.name;
        return report;
    } catch (const Error& e) {
        throw CommandFailure{e, exit_code_for(e.code()) == kExitOther ? kExitEval : exit_code_for(e.code()), {}};
    }
}

int run_eval(const EvalArgs& a) {
    std::optional<FeatureMode> mode;
    if (!a.mode.empty()) mode = parse_feature_mode(a.mode);
    const EvalReport report = evaluate_files(a.annotations, a.predictions, a.ledger);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    const std::string line = summary_line(report, mode);
    write_atomic(dir / "eval_report.csv", [&](std::ostream& os) { write_report_csv(os, report); });
    write_file_atomic(dir / "eval_summary.txt", line + "\n");
    std::cout << line << '\n';
    return kExitOk;
}

// --- compare ----------------------------------------------------------------

struct CompareArgs {
    std::vector<std::string> summaries;
    std::vector<std::string> predictions;
    std::string annotations;
    std::string ledger;
    std::string out_dir = ".";
};

int run_compare(const CompareArgs& a) {
    std::map<FeatureMode, EvalReport> reports;
    auto add = [&](FeatureMode mode, EvalReport report) {
        if (!reports.emplace(mode, std::move(report)).second) {
            throw Error(ErrorCode::BadConfig, "mode given twice", std::string(to_string(mode)));
        }
    };
    for (const std::string& s : a.summaries) {
        const auto [mode_name, path] = split_pair(s, '=', "MODE=FILE");
        std::string text = read_file(path);
        text = text.substr(0, text.find('\n'));
        ReportSummary summary;
        try {
            summary = parse_summary_line(text);
        } catch (const Error& e) {
            throw CommandFailure{e, exit_code_for(e.code()), path};
        }
        const FeatureMode mode = parse_feature_mode(mode_name);
        if (summary.mode && *summary.mode != mode) {
            throw Error(ErrorCode::ModeMismatch, "summary file is for mode " + std::string(to_string(*summary.mode)),
                        path);
        }
        EvalReport r;
        r.n_videos = summary.n_videos;
        r.mae = summary.mae;
        r.obo = summary.obo;
        r.ledger = summary.ledger;
        add(mode, r);
    }
    if (!a.predictions.empty() && a.annotations.empty()) {
        throw Error(ErrorCode::BadConfig, "--predictions needs --annotations");
    }
    for (const std::string& s : a.predictions) {
        const auto [mode_name, path] = split_pair(s, '=', "MODE=FILE");
        add(parse_feature_mode(mode_name), evaluate_files(a.annotations, path, a.ledger));
    }
    if (reports.size() < 2) throw Error(ErrorCode::BadConfig, "compare needs at least two modes");

    const std::vector<ModeRanking> rows = compare_modes(reports);
    const std::string table = format_comparison_table(rows);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    write_file_atomic(dir / "compare.txt", table);
    write_atomic(dir / "compare.csv", [&](std::ostream& os) { write_comparison_csv(os, rows); });
    std::cout << table;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repetition counting from body-pose landmarks"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file");

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate synthetic landmark clips with annotations");
    synth->add_option("--template", synth_args.template_name, "squat | jump_jack | pull_up")->capture_default_str();
    synth->add_option("--reps", synth_args.reps, "Repetitions per clip")->capture_default_str();
    synth->add_option("--period", synth_args.period, "Frames per repetition")->capture_default_str();
    synth->add_option("--noise", synth_args.noise, "Gaussian noise std on coordinates")->capture_default_str();
    synth->add_option("--yaw", synth_args.yaw, "Camera yaw change FRAME:DEGREES (repeatable)");
    synth->add_option("--incomplete", synth_args.incomplete, "Partial repetition REP:FRACTION");
    synth->add_flag("--sub-action", synth_args.sub_action, "Append a distractor movement");
    synth->add_option("--videos", synth_args.videos, "Number of clips (seeds seed..seed+N-1)")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "Noise seed")->capture_default_str();
    synth->add_option("--id", synth_args.id, "Video id (prefix when --videos > 1)");
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->capture_default_str();

    ValidateArgs validate_args;
    CLI::App* validate = app.add_subcommand("validate", "Check landmark, annotation and ledger files");
    validate->add_option("landmarks", validate_args.landmarks, "Landmark files or directories");
    validate->add_option("--annotations", validate_args.annotations, "Annotation CSV");
    validate->add_option("--ledger", validate_args.ledger, "Correction ledger CSV");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a saliency scorer from annotated clips");
    train_cmd->add_option("--annotations", train_args.annotations, "Annotation CSV with salient frames")->required();
    train_cmd->add_option("--landmarks", train_args.landmarks, "Landmark files or directories")->required();
    train_cmd->add_option("--mode", train_args.mode, "landmarks | left5 | lr10 | avg5")->capture_default_str();
    train_cmd->add_option("--model", train_args.model, "Checkpoint to write")->required();
    train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
    train_cmd->add_option("--lr", train_args.lr, "SGD step size")->capture_default_str();
    train_cmd->add_option("--batch", train_args.batch, "Minibatch size, 0 for full batch")->capture_default_str();
    train_cmd->add_option("--hidden", train_args.hidden, "Hidden layer sizes")->capture_default_str();
    train_cmd->add_option("--seed", train_args.seed, "Initialisation and shuffle seed")->capture_default_str();

    CountArgs count_args;
    CLI::App* count = app.add_subcommand("count", "Count repetitions in landmark clips");
    count->add_option("--landmarks", count_args.landmarks, "Landmark files or directories")->required();
    count->add_option("--annotations", count_args.annotations, "Take each clip's action from this CSV");
    count->add_option("--action", count_args.action, "Action for clips without an annotation");
    count->add_option("--model", count_args.model, "Trained scorer checkpoint (default: geometric rule)");
    count->add_option("--mode", count_args.mode, "Expected feature mode of the model");
    count->add_option("--rule", count_args.rule, "Geometric rule JOINT:POSE_I_DEG:POSE_II_DEG");
    count->add_option("--upper", count_args.upper, "Pose I limit")->capture_default_str();
    count->add_option("--lower", count_args.lower, "Pose II limit")->capture_default_str();
    count->add_option("--smooth", count_args.smooth, "Odd smoothing window")->capture_default_str();
    count->add_option("--order", count_args.order, "I-II or II-I")->capture_default_str();
    count->add_option("--out-dir", count_args.out_dir, "Output directory")->capture_default_str();

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Score predicted counts against annotations");
    eval->add_option("--annotations", eval_args.annotations, "Annotation CSV")->required();
    eval->add_option("--predictions", eval_args.predictions, "CSV with video_id and count columns")->required();
    eval->add_option("--ledger", eval_args.ledger, "Correction ledger CSV");
    eval->add_option("--mode", eval_args.mode, "Feature mode label for the summary");
    eval->add_option("--out-dir", eval_args.out_dir, "Output directory")->capture_default_str();

    CompareArgs compare_args;
    CLI::App* compare = app.add_subcommand("compare", "Rank feature modes by MAE and OBO");
    compare->add_option("--summary", compare_args.summaries, "MODE=FILE with an eval summary line (repeatable)");
    compare->add_option("--predictions", compare_args.predictions, "MODE=FILE predictions (repeatable)");
    compare->add_option("--annotations", compare_args.annotations, "Annotation CSV for --predictions");
    compare->add_option("--ledger", compare_args.ledger, "Correction ledger CSV");
    compare->add_option("--out-dir", compare_args.out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitOther;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "synth") return run_synth(synth_args);
        if (command == "validate") return run_validate(validate_args);
        if (command == "train") return run_train(train_args);
        if (command == "count") return run_count(count_args);
        if (command == "eval") return run_eval(eval_args);
        if (command == "compare") return run_compare(compare_args);
    } catch (const CommandFailure& f) {
        report_error(command, f.error, f.exit_code, f.file);
        return f.exit_code;
    } catch (const Error& e) {
        const int code = exit_code_for(e.code());
        report_error(command, e, code);
        return code;
    } catch (const std::exception& e) {
        report_error(command, Error(ErrorCode::IoFailure, e.what()), kExitOther);
        return kExitOther;
    }
    return kExitOther;
}
