#include "factts/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "factts/errors.hpp"
#include "factts/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace factts {

namespace {

std::string emotion_name(EmotionIndex e) {
    return e.is_neutral() ? std::string("neutral") : "e" + std::to_string(e.index());
}

EmotionIndex emotion_from_name(const std::string& s) {
    if (s == "neutral") return EmotionIndex::neutral();
    if (!s.empty() && s[0] == 'e') return EmotionIndex::at(std::stoi(s.substr(1)));
    return EmotionIndex::at(std::stoi(s));
}

GeneratorConfig generator_from_json(const json& j) {
    GeneratorConfig cfg;
    if (j.contains("speakers")) cfg.speakers = j["speakers"].get<int>();
    if (j.contains("emotions")) cfg.emotions = j["emotions"].get<int>();
    if (j.contains("emotional_speakers"))
        cfg.emotional_speakers = j["emotional_speakers"].get<std::vector<int>>();
    if (j.contains("sentences")) cfg.sentences = j["sentences"].get<int>();
    if (j.contains("contexts")) cfg.contexts = j["contexts"].get<int>();
    if (j.contains("regime")) cfg.regime = regime_from_string(j["regime"].get<std::string>());
    if (j.contains("noise")) cfg.noise_level = j["noise"].get<double>();
    if (j.contains("interaction")) cfg.interaction_strength = j["interaction"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("segments")) {
        cfg.min_segments = j["segments"].at(0).get<int>();
        cfg.max_segments = j["segments"].at(1).get<int>();
    }
    if (j.contains("durations")) {
        cfg.min_duration = j["durations"].at(0).get<int>();
        cfg.max_duration = j["durations"].at(1).get<int>();
    }
    return cfg;
}

TrainConfig train_from_json(const json& j, Task task, ArchKind arch) {
    TrainConfig cfg = default_train_config(task, arch);
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("lr")) cfg.learning_rate = j["lr"].get<double>();
    if (j.contains("momentum")) cfg.momentum = j["momentum"].get<double>();
    if (j.contains("minibatch")) cfg.minibatch_size = j["minibatch"].get<int>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("shuffle_seed")) cfg.shuffle_seed = j["shuffle_seed"].get<std::uint64_t>();
    return cfg;
}

// Experiment references inside a manifest: either a preset
// {"type": "open"|"closed", "speaker": j} / {"type": "sed", "speaker": j,
// "emotion": i} or {"type": "file", "path": "..."}.
ExperimentConfig experiment_from_manifest(const json& j, const Corpus& corpus) {
    const std::string type = j.at("type").get<std::string>();
    ExperimentConfig cfg;
    if (type == "open") {
        cfg = open_emotion_config(corpus, j.at("speaker").get<int>());
    } else if (type == "closed") {
        cfg = closed_emotion_config(corpus, j.at("speaker").get<int>());
    } else if (type == "sed") {
        cfg = sed_config(corpus, j.at("speaker").get<int>(),
                         EmotionIndex::at(j.at("emotion").get<int>()));
    } else if (type == "file") {
        cfg = load_experiment_config(j.at("path").get<std::string>());
    } else {
        throw InvalidConfig("unknown experiment type: " + type);
    }
    if (j.contains("split_seed")) {
        cfg.split.seed = j["split_seed"].get<std::uint64_t>();
        cfg.split_seed_set = true;
    }
    return cfg;
}

// "open:2", "closed:1", "sed:1:2", or a path to an experiment JSON file.
ExperimentConfig resolve_experiment(const Corpus& corpus, const std::string& spec) {
    if (spec.rfind("open:", 0) == 0) return open_emotion_config(corpus, std::stoi(spec.substr(5)));
    if (spec.rfind("closed:", 0) == 0)
        return closed_emotion_config(corpus, std::stoi(spec.substr(7)));
    if (spec.rfind("sed:", 0) == 0) {
        const std::string rest = spec.substr(4);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw InvalidConfig("sed experiment needs sed:<speaker>:<emotion>");
        return sed_config(corpus, std::stoi(rest.substr(0, colon)),
                          emotion_from_name(rest.substr(colon + 1)));
    }
    return load_experiment_config(spec);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

int input_dim_for(const GeneratorConfig& cfg, Task task) {
    return task == Task::duration ? cfg.segment_dim() : cfg.frame_dim();
}

int output_dim_for(Task task) {
    return task == Task::duration ? 1 : GeneratorConfig::acoustic_dim;
}

SplitSpec effective_split(const Corpus& corpus, const ExperimentConfig& expcfg) {
    SplitSpec spec = expcfg.split;
    if (!expcfg.split_seed_set) spec.seed = corpus.config.seed;
    return spec;
}

}  // namespace

namespace {

struct RawManifest {
    RunManifest manifest;
    std::vector<json> experiment_specs;
};

RawManifest load_manifest_raw(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidConfig("cannot open manifest: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw InvalidConfig("malformed manifest " + path + ": " + e.what());
    }
    try {
        RawManifest raw;
        const auto& corpus = j.at("corpus");
        raw.manifest.corpus_path = corpus.at("path").get<std::string>();
        if (corpus.contains("generate"))
            raw.manifest.generate = generator_from_json(corpus["generate"]);
        raw.manifest.out_dir = j.at("out_dir").get<std::string>();
        for (const auto& e : j.at("entries")) {
            ManifestEntry entry;
            entry.name = e.at("name").get<std::string>();
            entry.arch = arch_from_string(e.at("arch").get<std::string>());
            entry.task = task_from_string(e.value("task", std::string("acoustic")));
            if (e.contains("hidden")) entry.hidden_dims = e["hidden"].get<std::vector<int>>();
            entry.train = train_from_json(e.value("train", json::object()), entry.task,
                                          entry.arch);
            entry.init_seed = e.value("init_seed", std::uint64_t{0});
            raw.manifest.entries.push_back(std::move(entry));
            raw.experiment_specs.push_back(e.at("experiment"));
        }
        return raw;
    } catch (const json::exception& e) {
        throw InvalidConfig("malformed manifest " + path + ": " + e.what());
    }
}

int error_exit_code(const Error& e) {
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const DegenerateDimension*>(&e) ||
        dynamic_cast<const DegenerateVariance*>(&e) ||
        dynamic_cast<const InsufficientVoicedFrames*>(&e))
        return 2;
    return 1;
}

}  // namespace

GlobalVariance neutral_global_variance(const Corpus& corpus, const DataSplit& split,
                                       int speaker) {
    const CellRef cell{speaker, EmotionIndex::neutral()};
    const auto utts = cell_utterances(corpus, split, 0, cell);
    if (utts.empty())
        throw InvalidConfig("no neutral training utterances for speaker " +
                            std::to_string(speaker));
    std::vector<Matrix> continuous;
    continuous.reserve(utts.size());
    for (const Utterance* u : utts) {
        Matrix m(u->statics.rows, GeneratorConfig::continuous_dims);
        for (std::size_t t = 0; t < m.rows; ++t)
            for (std::size_t k = 0; k < m.cols; ++k) m.at(t, k) = u->statics.at(t, k);
        continuous.push_back(std::move(m));
    }
    std::vector<const Matrix*> ptrs;
    for (const Matrix& m : continuous) ptrs.push_back(&m);
    return pooled_variance(ptrs);
}

SynthesizedUtterance synthesize_utterance(const Network& net, const NormStats& stats,
                                          const Matrix& frame_inputs, const EmotionId& e,
                                          const SpeakerId& s, const GlobalVariance& gv) {
    return synthesize_utterance(net, stats, frame_inputs, e, s, &gv);
}

SynthesizedUtterance synthesize_utterance(const Network& net, const NormStats& stats,
                                          const Matrix& frame_inputs, const EmotionId& e,
                                          const SpeakerId& s, const GlobalVariance* gv) {
    const std::size_t T = frame_inputs.rows;
    if (T == 0) throw EmptyInput("synthesize_utterance: no frames");
    if (stats.mean.size() != static_cast<std::size_t>(GeneratorConfig::acoustic_dim))
        throw ShapeError("synthesize_utterance: model was not trained on acoustic targets");
    constexpr int K = GeneratorConfig::continuous_dims;

    TrajectoryDistribution dist;
    dist.means = Matrix(T, static_cast<std::size_t>(3 * K));
    dist.variances = Matrix(T, static_cast<std::size_t>(3 * K));
    SynthesizedUtterance out;
    out.vuv.resize(T);

    for (std::size_t t = 0; t < T; ++t) {
        Vector pred = forward(net, std::span<const double>(frame_inputs.row(t), frame_inputs.cols),
                              e, s);
        denormalize(stats, pred);
        for (int k = 0; k < 3 * K; ++k)
            dist.means.at(t, static_cast<std::size_t>(k)) = pred[static_cast<std::size_t>(k)];
        out.vuv[t] = pred[static_cast<std::size_t>(3 * K)];
    }
    // diagonal variances: the training targets' per-dimension global
    // variances, constant over frames
    for (std::size_t t = 0; t < T; ++t)
        for (int k = 0; k < 3 * K; ++k)
            dist.variances.at(t, static_cast<std::size_t>(k)) =
                stats.std[static_cast<std::size_t>(k)] * stats.std[static_cast<std::size_t>(k)];

    out.statics = mlpg(dist);
    if (gv != nullptr) out.statics = variance_scaling(out.statics, *gv);
    return out;
}

namespace {

Matrix continuous_columns(const Matrix& statics, std::size_t first, std::size_t count) {
    Matrix m(statics.rows, count);
    for (std::size_t t = 0; t < statics.rows; ++t)
        for (std::size_t k = 0; k < count; ++k) m.at(t, k) = statics.at(t, first + k);
    return m;
}

void evaluate_acoustic_cell(const Network& net, const NormStats& stats, const Corpus& corpus,
                            const DataSplit& split, const EvalCell& ec, MetricReport& report) {
    const GlobalVariance gv = neutral_global_variance(corpus, split, ec.cell.speaker);
    const EmotionId e = emotion_id(ec.cell.emotion, corpus.config.emotions);
    const SpeakerId s = speaker_id(ec.cell.speaker, corpus.config.speakers);
    const auto utts = cell_utterances(corpus, split, 2, ec.cell);

    WeightedMean logf0_rmse, logf0_corr, mcd_db, vuv_err;
    for (const Utterance* u : utts) {
        const SynthesizedUtterance synth =
            synthesize_utterance(net, stats, u->linguistic, e, s, &gv);
        const std::size_t T = u->statics.rows;

        Vector pred_f0(T), target_f0(T), target_vuv(T);
        for (std::size_t t = 0; t < T; ++t) {
            pred_f0[t] = synth.statics.at(t, 0);
            target_f0[t] = u->statics.at(t, 0);
            target_vuv[t] = u->statics.at(t, GeneratorConfig::vuv_channel);
        }
        // utterances without enough jointly-voiced frames contribute nothing
        // to the log-F0 aggregates
        try {
            const LogF0Metrics m = logf0_metrics(pred_f0, target_f0, synth.vuv, target_vuv);
            logf0_rmse.add(m.rmse, static_cast<double>(m.voiced_frames));
            logf0_corr.add(m.correlation, static_cast<double>(m.voiced_frames));
        } catch (const InsufficientVoicedFrames&) {
        } catch (const DegenerateVariance&) {
        }

        const Matrix pred_cep = continuous_columns(synth.statics, 1, 3);
        const Matrix target_cep = continuous_columns(u->statics, 1, 3);
        mcd_db.add(mcd(pred_cep, target_cep), static_cast<double>(T));
        vuv_err.add(vuv_error_rate(synth.vuv, target_vuv), static_cast<double>(T));
    }
    if (logf0_rmse.empty())
        throw InsufficientVoicedFrames("cell " + to_string(ec.cell) +
                                       ": no utterance had enough jointly-voiced frames");

    const std::string model = to_string(net.kind);
    const std::string emo = emotion_name(ec.cell.emotion);
    report.rows.push_back({model, ec.cell.speaker, emo, ec.kind, "logf0_rmse",
                           logf0_rmse.value(),
                           static_cast<std::int64_t>(logf0_rmse.total_weight)});
    report.rows.push_back({model, ec.cell.speaker, emo, ec.kind, "logf0_corr",
                           logf0_corr.value(),
                           static_cast<std::int64_t>(logf0_corr.total_weight)});
    report.rows.push_back({model, ec.cell.speaker, emo, ec.kind, "mcd_db", mcd_db.value(),
                           static_cast<std::int64_t>(mcd_db.total_weight)});
    report.rows.push_back({model, ec.cell.speaker, emo, ec.kind, "vuv_error_rate",
                           vuv_err.value(), static_cast<std::int64_t>(vuv_err.total_weight)});
}

void evaluate_duration_cell(const Network& net, const NormStats& stats, const Corpus& corpus,
                            const DataSplit& split, const EvalCell& ec, MetricReport& report) {
    const EmotionId e = emotion_id(ec.cell.emotion, corpus.config.emotions);
    const SpeakerId s = speaker_id(ec.cell.speaker, corpus.config.speakers);
    const auto utts = cell_utterances(corpus, split, 2, ec.cell);

    WeightedMean rmse_ms;
    for (const Utterance* u : utts) {
        Vector pred, target;
        for (const SegmentInfo& seg : u->segments) {
            Vector y = forward(net, seg.features, e, s);
            denormalize(stats, y);
            pred.push_back(y[0]);
            target.push_back(static_cast<double>(seg.duration));
        }
        rmse_ms.add(duration_rmse(pred, target), static_cast<double>(pred.size()));
    }
    report.rows.push_back({to_string(net.kind), ec.cell.speaker,
                           emotion_name(ec.cell.emotion), ec.kind, "duration_rmse_ms",
                           rmse_ms.value(), static_cast<std::int64_t>(rmse_ms.total_weight)});
}

}  // namespace

MetricReport evaluate_model(const Network& net, const NormStats& stats, const Corpus& corpus,
                            const DataSplit& split, const ExperimentConfig& expcfg, Task task) {
    MetricReport report;
    for (const EvalCell& ec : expcfg.eval_cells) {
        if (!corpus.has_cell(ec.cell))
            throw InvalidConfig("evaluation cell " + to_string(ec.cell) + " does not exist");
        if (task == Task::acoustic)
            evaluate_acoustic_cell(net, stats, corpus, split, ec, report);
        else
            evaluate_duration_cell(net, stats, corpus, split, ec, report);
    }
    return report;
}

namespace {

struct TrainedEntry {
    Network net;
    NormStats stats;
    TrainReport report;
    DataSplit split;
    ExperimentConfig expcfg;
};

TrainedEntry train_entry(const Corpus& corpus, const ManifestEntry& entry,
                         const ExperimentConfig& expcfg) {
    TrainedEntry out;
    out.expcfg = expcfg;
    out.split = split_dataset(corpus, effective_split(corpus, expcfg));
    SampleSet train_set = assemble_training_view(corpus, out.split, expcfg, entry.task);
    if (train_set.empty()) throw InvalidConfig("entry " + entry.name + ": empty training view");

    std::vector<Vector> targets;
    targets.reserve(train_set.size());
    for (const Sample& s : train_set) targets.push_back(s.target);
    out.stats = compute_norm_stats(targets);
    for (Sample& s : train_set) normalize(out.stats, s.target);

    SampleSet valid_set =
        partition_view(corpus, out.split, expcfg.train_cells, entry.task, 1);
    for (Sample& s : valid_set) normalize(out.stats, s.target);

    out.net = build_architecture(entry.arch, input_dim_for(corpus.config, entry.task),
                                 entry.hidden_dims, output_dim_for(entry.task),
                                 corpus.config.emotions, corpus.config.speakers,
                                 entry.init_seed);
    out.report = train(out.net, train_set, valid_set, entry.train, out.stats);
    return out;
}

}  // namespace

namespace {

RunResult run_with_corpus(const Corpus& corpus, const RunManifest& manifest) {
    fs::create_directories(manifest.out_dir);

    RunResult result;
    for (const ManifestEntry& entry : manifest.entries) {
        EntryResult er;
        er.name = entry.name;
        try {
            if (entry.name.empty()) throw InvalidConfig("manifest entry without a name");
            const TrainedEntry trained = train_entry(corpus, entry, entry.experiment);
            const fs::path dir = fs::path(manifest.out_dir) / entry.name;
            fs::create_directories(dir);
            save_model(trained.net, (dir / "model.bin").string(), trained.stats.mean,
                       trained.stats.std);
            write_curves_csv(trained.report, (dir / "curves.csv").string());
            const MetricReport metrics = evaluate_model(trained.net, trained.stats, corpus,
                                                        trained.split, trained.expcfg,
                                                        entry.task);
            write_metric_csv(metrics, (dir / "metrics.csv").string());
            result.combined.rows.insert(result.combined.rows.end(), metrics.rows.begin(),
                                        metrics.rows.end());
            er.ok = true;
        } catch (const Error& e) {
            er.ok = false;
            er.error = e.what();
        }
        result.entries.push_back(std::move(er));
    }
    write_metric_csv(result.combined, (fs::path(manifest.out_dir) / "report.csv").string());
    write_metric_summary(result.combined,
                         (fs::path(manifest.out_dir) / "summary.txt").string());
    return result;
}

Corpus materialize_corpus(const RunManifest& manifest) {
    if (manifest.generate) {
        Corpus corpus = generate_synthetic_corpus(*manifest.generate);
        save_corpus(corpus, manifest.corpus_path);
        return corpus;
    }
    return load_corpus(manifest.corpus_path);
}

}  // namespace

RunResult run_experiment(const RunManifest& manifest) {
    return run_with_corpus(materialize_corpus(manifest), manifest);
}

RunResult run_manifest_file(const std::string& path) {
    RawManifest raw = load_manifest_raw(path);
    const Corpus corpus = materialize_corpus(raw.manifest);
    for (std::size_t i = 0; i < raw.manifest.entries.size(); ++i)
        raw.manifest.entries[i].experiment =
            experiment_from_manifest(raw.experiment_specs[i], corpus);
    return run_with_corpus(corpus, raw.manifest);
}

Comparison compare_reports(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ReportError("no reports to compare");
    std::vector<MetricReport> reports;
    reports.reserve(paths.size());
    for (const std::string& p : paths) reports.push_back(read_metric_csv(p));
    const bool multi = reports.size() > 1;

    Comparison cmp;
    // column per (report, model, kind) in first-appearance order
    struct ColKey {
        std::size_t report;
        std::string model, kind;
        bool operator==(const ColKey&) const = default;
    };
    std::vector<ColKey> cols;
    auto col_label = [&](const ColKey& k) {
        std::string label = k.model + ":" + k.kind;
        if (multi) label += "@r" + std::to_string(k.report);
        return label;
    };
    for (std::size_t r = 0; r < reports.size(); ++r)
        for (const MetricRow& row : reports[r].rows) {
            const ColKey key{r, row.model, row.test_kind};
            if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
        }
    for (const ColKey& k : cols) cmp.columns.push_back(col_label(k));

    // row keys in first-appearance order
    struct RowKey {
        int speaker;
        std::string emotion, metric;
        bool operator==(const RowKey&) const = default;
    };
    std::vector<RowKey> keys;
    for (const MetricReport& rep : reports)
        for (const MetricRow& row : rep.rows) {
            const RowKey key{row.speaker, row.emotion, row.metric};
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
        }

    auto find_value = [&](std::size_t r, const std::string& model, const std::string& kind,
                          const RowKey& key) -> std::optional<double> {
        for (const MetricRow& row : reports[r].rows)
            if (row.model == model && row.test_kind == kind && row.speaker == key.speaker &&
                row.emotion == key.emotion && row.metric == key.metric)
                return row.value;
        return std::nullopt;
    };

    const auto higher_better = [](const std::string& metric) { return metric == "logf0_corr"; };

    for (const RowKey& key : keys) {
        Comparison::Row row;
        row.speaker = key.speaker;
        row.emotion = key.emotion;
        row.metric = key.metric;
        for (const ColKey& k : cols) row.values.push_back(find_value(k.report, k.model, k.kind, key));

        // best column
        std::optional<double> best;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (!row.values[c]) continue;
            const double v = *row.values[c];
            if (!best || (higher_better(key.metric) ? v > *best : v < *best)) {
                best = v;
                row.best = cmp.columns[c];
            }
        }

        // cross-report deltas against the first report
        if (multi) {
            for (const ColKey& k : cols) {
                if (k.report == 0) continue;
                const auto base = find_value(0, k.model, k.kind, key);
                const auto cur = find_value(k.report, k.model, k.kind, key);
                if (base && cur)
                    row.deltas.push_back({"d(" + k.model + ":" + k.kind + ")@r" +
                                              std::to_string(k.report) + "-r0",
                                          *cur - *base});
            }
        }
        // open-vs-closed deltas per architecture within each report
        for (std::size_t r = 0; r < reports.size(); ++r) {
            std::vector<std::string> models;
            for (const ColKey& k : cols)
                if (k.report == r &&
                    std::find(models.begin(), models.end(), k.model) == models.end())
                    models.push_back(k.model);
            for (const std::string& m : models) {
                const auto open = find_value(r, m, "open", key);
                const auto closed = find_value(r, m, "closed", key);
                if (open && closed) {
                    std::string label = "d_open_closed(" + m + ")";
                    if (multi) label += "@r" + std::to_string(r);
                    row.deltas.push_back({label, *open - *closed});
                }
            }
        }
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

void write_comparison(const Comparison& cmp, std::ostream& os) {
    os << "cell/metric";
    for (const std::string& c : cmp.columns) os << '\t' << c;
    os << "\tbest\n";
    for (const Comparison::Row& row : cmp.rows) {
        os << 's' << row.speaker << ':' << row.emotion << '/' << row.metric;
        for (const auto& v : row.values) {
            os << '\t';
            if (v)
                os << io::fmt_double(*v);
            else
                os << "absent";
        }
        os << '\t' << (row.best.empty() ? "-" : row.best) << '\n';
        for (const auto& [label, value] : row.deltas)
            os << "  " << label << " = " << io::fmt_double(value) << '\n';
    }
}

// ---------------------------------------------------------------------------
// CLI

namespace {

int cli_gen_corpus(const std::string& config_path, const std::string& out_dir, json overrides) {
    json base = json::object();
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) throw InvalidConfig("cannot open generator config: " + config_path);
        try {
            is >> base;
        } catch (const json::exception& e) {
            throw InvalidConfig(std::string("malformed generator config: ") + e.what());
        }
    }
    base.update(overrides);
    const GeneratorConfig cfg = generator_from_json(base);
    const Corpus corpus = generate_synthetic_corpus(cfg);
    save_corpus(corpus, out_dir);
    std::cout << "wrote corpus with " << corpus.utterances.size() << " utterances to " << out_dir
              << " (kernels: " << kernels::backend_name() << ")\n";
    return 0;
}

int cli_train(const std::string& corpus_dir, const std::string& experiment,
              const std::string& arch, const std::string& task_name,
              const std::string& model_out, const std::string& curves_out,
              const std::string& hidden, const json& train_overrides, std::uint64_t init_seed) {
    const Corpus corpus = load_corpus(corpus_dir);
    const Task task = task_from_string(task_name);
    const ArchKind kind = arch_from_string(arch);

    ManifestEntry entry;
    entry.name = "cli";
    entry.arch = kind;
    entry.task = task;
    if (!hidden.empty()) entry.hidden_dims = parse_int_list(hidden);
    entry.train = train_from_json(train_overrides, task, kind);
    entry.init_seed = init_seed;

    const ExperimentConfig expcfg = resolve_experiment(corpus, experiment);
    const TrainedEntry trained = train_entry(corpus, entry, expcfg);
    save_model(trained.net, model_out, trained.stats.mean, trained.stats.std);
    if (!curves_out.empty()) write_curves_csv(trained.report, curves_out);
    std::cout << "trained " << arch << " (" << task_name << "), best epoch "
              << trained.report.best_epoch << ", valid mse "
              << io::fmt_double(trained.report.valid_mse.empty()
                                    ? 0.0
                                    : trained.report.valid_mse[static_cast<std::size_t>(
                                          trained.report.best_epoch - 1)])
              << ", model written to " << model_out << "\n";
    return 0;
}

int cli_eval(const std::string& corpus_dir, const std::string& model_path,
             const std::string& experiment, const std::string& task_name,
             const std::string& out_csv, const std::string& summary_out) {
    const Corpus corpus = load_corpus(corpus_dir);
    const LoadedModel model = load_model(model_path);
    if (model.target_mean.empty())
        throw InvalidConfig("model file carries no normalization stats; retrain with this tool");
    const ExperimentConfig expcfg = resolve_experiment(corpus, experiment);
    const DataSplit split = split_dataset(corpus, effective_split(corpus, expcfg));
    const NormStats stats{model.target_mean, model.target_std};
    const MetricReport report = evaluate_model(model.net, stats, corpus, split, expcfg,
                                               task_from_string(task_name));
    write_metric_csv(report, out_csv);
    if (!summary_out.empty()) write_metric_summary(report, summary_out);
    std::cout << "wrote " << report.rows.size() << " metric rows to " << out_csv << "\n";
    return 0;
}

int cli_synth(const std::string& corpus_dir, const std::string& model_path, int speaker,
              const std::string& emotion, const std::string& out_dir,
              const std::string& durations_mode, const std::string& duration_model_path,
              int partition) {
    const Corpus corpus = load_corpus(corpus_dir);
    const LoadedModel model = load_model(model_path);
    if (model.target_mean.empty())
        throw InvalidConfig("model file carries no normalization stats");
    const NormStats stats{model.target_mean, model.target_std};
    const EmotionIndex emo = emotion_from_name(emotion);
    if (!emo.is_neutral() && emo.index() > corpus.config.emotions)
        throw InvalidConfig("emotion index out of range for this corpus");
    if (speaker < 1 || speaker > corpus.config.speakers)
        throw InvalidConfig("speaker index out of range for this corpus");
    // extrapolation: when the requested cell has no recordings, borrow the
    // utterance structure from the speaker's neutral cell
    const CellRef cell{speaker, emo};
    const CellRef source_cell =
        corpus.has_cell(cell) ? cell : CellRef{speaker, EmotionIndex::neutral()};

    ExperimentConfig probe;  // only used for the default split seed
    const DataSplit split = split_dataset(corpus, effective_split(corpus, probe));
    const GlobalVariance gv = neutral_global_variance(corpus, split, speaker);
    const EmotionId e = emotion_id(emo, corpus.config.emotions);
    const SpeakerId s = speaker_id(speaker, corpus.config.speakers);

    LoadedModel duration_model;
    const bool predicted = durations_mode == "predicted";
    if (predicted) {
        // off-protocol convenience mode: chain the duration model instead of
        // consuming reference durations
        if (duration_model_path.empty())
            throw InvalidConfig("--durations predicted requires --duration-model");
        duration_model = load_model(duration_model_path);
        if (duration_model.target_mean.empty())
            throw InvalidConfig("duration model carries no normalization stats");
    } else if (durations_mode != "oracle") {
        throw InvalidConfig("--durations must be oracle or predicted");
    }

    fs::create_directories(out_dir);
    int written = 0;
    for (const Utterance* u : cell_utterances(corpus, split, partition, source_cell)) {
        Utterance gen;
        gen.sentence = u->sentence;
        gen.speaker = u->speaker;
        gen.emotion = u->emotion;
        gen.segments = u->segments;
        if (predicted) {
            const NormStats dstats{duration_model.target_mean, duration_model.target_std};
            for (SegmentInfo& seg : gen.segments) {
                Vector y = forward(duration_model.net, seg.features, e, s);
                denormalize(dstats, y);
                seg.duration = std::max(1, static_cast<int>(std::llround(y[0])));
            }
        }
        gen.linguistic = frame_features(corpus.config, gen.segments);
        const SynthesizedUtterance synth =
            synthesize_utterance(model.net, stats, gen.linguistic, e, s, &gv);
        gen.statics = Matrix(gen.linguistic.rows, GeneratorConfig::static_dims);
        for (std::size_t t = 0; t < gen.statics.rows; ++t) {
            for (int k = 0; k < GeneratorConfig::continuous_dims; ++k)
                gen.statics.at(t, static_cast<std::size_t>(k)) =
                    synth.statics.at(t, static_cast<std::size_t>(k));
            gen.statics.at(t, GeneratorConfig::vuv_channel) =
                is_voiced(synth.vuv[t]) ? 1.0 : 0.0;
        }
        char name[64];
        std::snprintf(name, sizeof(name), "gen_s%02d_e%d_n%04d.bin", speaker,
                      emo.is_neutral() ? 0 : emo.index(), u->sentence);
        save_utterance_record(gen, (fs::path(out_dir) / name).string());
        ++written;
    }
    std::cout << "synthesized " << written << " utterances to " << out_dir << "\n";
    return 0;
}

int cli_report(const std::string& manifest_path) {
    const RunResult result = run_manifest_file(manifest_path);
    int code = 0;
    for (const EntryResult& er : result.entries) {
        std::cout << (er.ok ? "ok    " : "FAIL  ") << er.name;
        if (!er.ok) {
            std::cout << "  (" << er.error << ")";
            if (code == 0) code = 1;
        }
        std::cout << "\n";
    }
    std::cout << "combined report written\n";
    return code;
}

int cli_compare(const std::vector<std::string>& reports, const std::string& out_path) {
    const Comparison cmp = compare_reports(reports);
    if (out_path.empty()) {
        write_comparison(cmp, std::cout);
    } else {
        std::ofstream os(out_path, std::ios::binary);
        if (!os) throw InvalidConfig("cannot open comparison output: " + out_path);
        write_comparison(cmp, os);
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"factored multi-speaker multi-emotion TTS model harness"};
    app.require_subcommand(1);

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    std::string gen_config, gen_out = "corpus";
    json gen_overrides = json::object();
    gen->add_option("--config", gen_config, "generator config JSON");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option_function<int>("--speakers", [&](int v) { gen_overrides["speakers"] = v; });
    gen->add_option_function<int>("--emotions", [&](int v) { gen_overrides["emotions"] = v; });
    gen->add_option_function<int>("--sentences", [&](int v) { gen_overrides["sentences"] = v; });
    gen->add_option_function<int>("--contexts", [&](int v) { gen_overrides["contexts"] = v; });
    gen->add_option_function<double>("--noise", [&](double v) { gen_overrides["noise"] = v; });
    gen->add_option_function<double>("--interaction",
                                     [&](double v) { gen_overrides["interaction"] = v; });
    gen->add_option_function<std::uint64_t>("--seed",
                                            [&](std::uint64_t v) { gen_overrides["seed"] = v; });
    gen->add_option_function<std::string>("--regime", [&](const std::string& v) {
        gen_overrides["regime"] = v;
    });
    gen->add_option_function<std::string>("--emotional-speakers", [&](const std::string& v) {
        gen_overrides["emotional_speakers"] = parse_int_list(v);
    });

    // train
    auto* tr = app.add_subcommand("train", "train one model");
    std::string tr_corpus, tr_exp, tr_arch, tr_task = "acoustic", tr_out, tr_curves, tr_hidden;
    json tr_overrides = json::object();
    std::uint64_t tr_init_seed = 0;
    tr->add_option("--corpus", tr_corpus, "corpus directory")->required();
    tr->add_option("--experiment", tr_exp,
                   "experiment: open:<spk>, closed:<spk>, sed:<spk>:<emo>, or a JSON path")
        ->required();
    tr->add_option("--arch", tr_arch, "pm|sm_se|sm_es|aim|pm_aim|sm_se_aim|sm_es_aim|sed")
        ->required();
    tr->add_option("--task", tr_task, "duration|acoustic");
    tr->add_option("--out", tr_out, "model output path")->required();
    tr->add_option("--curves", tr_curves, "training curves CSV path");
    tr->add_option("--hidden", tr_hidden, "hidden layer sizes, e.g. 32,32");
    tr->add_option("--init-seed", tr_init_seed, "weight initialization seed");
    tr->add_option_function<double>("--lr", [&](double v) { tr_overrides["lr"] = v; });
    tr->add_option_function<double>("--momentum",
                                    [&](double v) { tr_overrides["momentum"] = v; });
    tr->add_option_function<int>("--batch", [&](int v) { tr_overrides["minibatch"] = v; });
    tr->add_option_function<int>("--epochs", [&](int v) { tr_overrides["epochs"] = v; });
    tr->add_option_function<std::uint64_t>("--shuffle-seed", [&](std::uint64_t v) {
        tr_overrides["shuffle_seed"] = v;
    });

    // synth
    auto* sy = app.add_subcommand("synth", "generate trajectories for one cell");
    std::string sy_corpus, sy_model, sy_emotion, sy_out, sy_durations = "oracle", sy_dmodel;
    int sy_speaker = 1, sy_partition = 2;
    sy->add_option("--corpus", sy_corpus)->required();
    sy->add_option("--model", sy_model, "acoustic model file")->required();
    sy->add_option("--speaker", sy_speaker)->required();
    sy->add_option("--emotion", sy_emotion, "neutral or 1-based index")->required();
    sy->add_option("--out", sy_out, "output directory")->required();
    sy->add_option("--durations", sy_durations,
                   "oracle (reference durations) or predicted (chained duration model; "
                   "off the reference evaluation protocol)");
    sy->add_option("--duration-model", sy_dmodel, "duration model for --durations predicted");
    sy->add_option("--partition", sy_partition, "0=train 1=valid 2=test");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a model on its configured cells");
    std::string ev_corpus, ev_model, ev_exp, ev_task = "acoustic", ev_out, ev_summary;
    ev->add_option("--corpus", ev_corpus)->required();
    ev->add_option("--model", ev_model)->required();
    ev->add_option("--experiment", ev_exp)->required();
    ev->add_option("--task", ev_task, "duration|acoustic");
    ev->add_option("--out", ev_out, "metrics CSV path")->required();
    ev->add_option("--summary", ev_summary, "summary text path");

    // report
    auto* rp = app.add_subcommand("report", "run a full experiment manifest");
    std::string rp_manifest;
    rp->add_option("--manifest", rp_manifest, "manifest JSON")->required();

    // compare
    auto* cp = app.add_subcommand("compare", "compare metric reports");
    std::vector<std::string> cp_reports;
    std::string cp_out;
    cp->add_option("reports", cp_reports, "report CSV paths")->required();
    cp->add_option("--out", cp_out, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cli_gen_corpus(gen_config, gen_out, gen_overrides);
        if (tr->parsed())
            return cli_train(tr_corpus, tr_exp, tr_arch, tr_task, tr_out, tr_curves, tr_hidden,
                             tr_overrides, tr_init_seed);
        if (sy->parsed())
            return cli_synth(sy_corpus, sy_model, sy_speaker, sy_emotion, sy_out, sy_durations,
                             sy_dmodel, sy_partition);
        if (ev->parsed()) return cli_eval(ev_corpus, ev_model, ev_exp, ev_task, ev_out, ev_summary);
        if (rp->parsed()) return cli_report(rp_manifest);
        if (cp->parsed()) return cli_compare(cp_reports, cp_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return error_exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace factts
