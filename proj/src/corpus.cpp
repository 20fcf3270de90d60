#include "factts/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "factts/errors.hpp"
#include "factts/io.hpp"
#include "factts/rng.hpp"

namespace fs = std::filesystem;

namespace factts {

std::string to_string(Regime r) { return r == Regime::additive ? "additive" : "entangled"; }

Regime regime_from_string(const std::string& s) {
    if (s == "additive") return Regime::additive;
    if (s == "entangled") return Regime::entangled;
    throw InvalidConfig("unknown regime: " + s);
}

std::string to_string(const CellRef& c) {
    return "s" + std::to_string(c.speaker) + ":" +
           (c.emotion.is_neutral() ? std::string("neutral")
                                   : "e" + std::to_string(c.emotion.index()));
}

std::vector<CellRef> Corpus::cells() const {
    std::vector<CellRef> out;
    for (int s = 1; s <= config.speakers; ++s)
        out.push_back({s, EmotionIndex::neutral()});
    for (int s : config.emotional_speakers)
        for (int e = 1; e <= config.emotions; ++e) out.push_back({s, EmotionIndex::at(e)});
    return out;
}

bool Corpus::has_cell(const CellRef& c) const {
    const auto all = cells();
    return std::find(all.begin(), all.end(), c) != all.end();
}

namespace {

// RNG stream ids
constexpr std::uint64_t kStreamSentences = 1;
constexpr std::uint64_t kStreamBase = 2;
constexpr std::uint64_t kStreamFactors = 3;
constexpr std::uint64_t kStreamInteraction = 4;
constexpr std::uint64_t kStreamNoise = 5;

void validate(const GeneratorConfig& cfg) {
    if (cfg.speakers < 2) throw InvalidConfig("need at least 2 speakers");
    if (cfg.emotions < 1) throw InvalidConfig("need at least 1 emotion");
    if (cfg.sentences < 10) throw InvalidConfig("need at least 10 utterances per cell");
    if (cfg.contexts < 2) throw InvalidConfig("need at least 2 context classes");
    if (cfg.emotional_speakers.empty())
        throw InvalidConfig("invalid cell grid: no emotional speakers");
    std::vector<int> seen;
    for (int s : cfg.emotional_speakers) {
        if (s < 1 || s > cfg.speakers)
            throw InvalidConfig("invalid cell grid: emotional speaker " + std::to_string(s) +
                                " out of range");
        if (std::find(seen.begin(), seen.end(), s) != seen.end())
            throw InvalidConfig("invalid cell grid: duplicate emotional speaker");
        seen.push_back(s);
    }
    if (cfg.min_segments < 1 || cfg.max_segments < cfg.min_segments)
        throw InvalidConfig("invalid segment count range");
    if (cfg.min_duration < 2 || cfg.max_duration < cfg.min_duration)
        throw InvalidConfig("invalid duration range");
    if (cfg.noise_level < 0.0) throw InvalidConfig("negative noise level");
    if (cfg.interaction_strength < 0.0) throw InvalidConfig("negative interaction strength");
    if (cfg.regime == Regime::additive && cfg.interaction_strength != 0.0)
        throw InvalidConfig("additive regime requires zero interaction strength");
}


// Static-channel coefficients: rows 0..3 are free; the V/UV row is bounded
// so the flag stays inside [0, 1] for any reachable feature vector.
Matrix draw_channel_matrix(Rng& rng, const GeneratorConfig& cfg, double scale,
                           bool with_vuv_row) {
    const std::size_t cols = static_cast<std::size_t>(cfg.frame_dim()) + 1;
    Matrix m(GeneratorConfig::static_dims, cols);
    for (int k = 0; k < GeneratorConfig::continuous_dims; ++k)
        for (std::size_t c = 0; c < cols; ++c) m.at(k, c) = rng.uniform(-scale, scale);
    if (with_vuv_row) {
        const std::size_t ctx = static_cast<std::size_t>(cfg.contexts);
        for (std::size_t c = 0; c < ctx; ++c)
            m.at(GeneratorConfig::vuv_channel, c) = rng.uniform(-0.2, 0.2);
        for (std::size_t c = ctx; c + 1 < cols; ++c)
            m.at(GeneratorConfig::vuv_channel, c) = rng.uniform(-0.03, 0.03);
        m.at(GeneratorConfig::vuv_channel, cols - 1) = 0.5;
    }
    return m;
}

GroundTruth make_ground_truth(const GeneratorConfig& cfg) {
    GroundTruth gt;
    Rng root(cfg.seed);

    Rng base_rng = root.fork(kStreamBase);
    gt.base = draw_channel_matrix(base_rng, cfg, 0.8, true);

    Rng factor_rng = root.fork(kStreamFactors);
    for (int e = 0; e < cfg.emotions; ++e)
        gt.emotion_offset.push_back(draw_channel_matrix(factor_rng, cfg, 0.4, false));
    for (int s = 0; s < cfg.speakers; ++s)
        gt.speaker_offset.push_back(draw_channel_matrix(factor_rng, cfg, 0.4, false));
    const std::size_t zdim = static_cast<std::size_t>(cfg.segment_dim()) + 1;
    for (int e = 0; e < cfg.emotions; ++e) {
        Vector v(zdim);
        for (double& x : v) x = factor_rng.uniform(-1.0, 1.0);
        gt.dur_emotion.push_back(std::move(v));
    }
    for (int s = 0; s < cfg.speakers; ++s) {
        Vector v(zdim);
        for (double& x : v) x = factor_rng.uniform(-1.0, 1.0);
        gt.dur_speaker.push_back(std::move(v));
    }

    if (cfg.regime == Regime::entangled) {
        Rng inter_rng = root.fork(kStreamInteraction);
        gt.interaction.resize(static_cast<std::size_t>(cfg.emotions));
        for (int e = 0; e < cfg.emotions; ++e)
            for (int s = 0; s < cfg.speakers; ++s)
                gt.interaction[static_cast<std::size_t>(e)].push_back(
                    draw_channel_matrix(inter_rng, cfg, 0.4, false));
    }
    return gt;
}

struct SentenceTemplate {
    struct Seg {
        int context;
        int base_duration;
    };
    std::vector<Seg> segments;
};

SentenceTemplate sentence_template(const GeneratorConfig& cfg, const Rng& root, int sentence) {
    Rng rng = root.fork(kStreamSentences).fork(static_cast<std::uint64_t>(sentence));
    SentenceTemplate t;
    const int count = cfg.min_segments +
                      static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                          cfg.max_segments - cfg.min_segments + 1)));
    for (int i = 0; i < count; ++i) {
        SentenceTemplate::Seg s;
        s.context = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.contexts)));
        s.base_duration =
            cfg.min_duration + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                                   cfg.max_duration - cfg.min_duration + 1)));
        t.segments.push_back(s);
    }
    return t;
}

Vector segment_features(const GeneratorConfig& cfg, const SentenceTemplate& t, int seg_idx) {
    Vector z(static_cast<std::size_t>(cfg.segment_dim()), 0.0);
    z[static_cast<std::size_t>(t.segments[static_cast<std::size_t>(seg_idx)].context)] = 1.0;
    const std::size_t base = static_cast<std::size_t>(cfg.contexts);
    const double n_segs = static_cast<double>(t.segments.size());
    z[base + 0] = (static_cast<double>(seg_idx) + 0.5) / n_segs;
    z[base + 1] = n_segs / 10.0;
    z[base + 2] =
        static_cast<double>(t.segments[static_cast<std::size_t>(seg_idx)].base_duration) / 20.0;
    z[base + 3] = seg_idx + 1 == static_cast<int>(t.segments.size()) ? 1.0 : 0.0;
    return z;
}

double affine_over(const Vector& coeffs, std::span<const double> x) {
    // coeffs = [weights; bias]
    double acc = kernels::active().dot(coeffs.data(), x.data(), x.size());
    return acc + coeffs[x.size()];
}

int realized_duration(const Corpus& corpus, const Vector& z, EmotionIndex e, int speaker,
                      int base) {
    const GroundTruth& gt = corpus.truth;
    double d = static_cast<double>(base);
    if (!e.is_neutral())
        d += affine_over(gt.dur_emotion[static_cast<std::size_t>(e.index() - 1)], z);
    d += affine_over(gt.dur_speaker[static_cast<std::size_t>(speaker - 1)], z);
    const int frames = static_cast<int>(std::llround(d));
    return std::max(2, frames);
}

}  // namespace

Vector ground_truth_target(const Corpus& corpus, std::span<const double> x, EmotionIndex e,
                           int speaker) {
    const GeneratorConfig& cfg = corpus.config;
    if (static_cast<int>(x.size()) != cfg.frame_dim())
        throw ShapeError("ground_truth_target: frame vector dimension mismatch");
    if (speaker < 1 || speaker > cfg.speakers)
        throw InvalidFactorIndex("speaker out of range");
    if (!e.is_neutral() && e.index() > cfg.emotions)
        throw InvalidFactorIndex("emotion out of range");

    Vector psi(x.begin(), x.end());
    psi.push_back(1.0);
    const auto row_dot = [&](const Matrix& m, int k) {
        return kernels::active().dot(m.row(static_cast<std::size_t>(k)), psi.data(), psi.size());
    };
    Vector target(GeneratorConfig::static_dims);
    for (int k = 0; k < GeneratorConfig::static_dims; ++k) {
        double v = row_dot(corpus.truth.base, k);
        if (!e.is_neutral())
            v += row_dot(corpus.truth.emotion_offset[static_cast<std::size_t>(e.index() - 1)], k);
        v += row_dot(corpus.truth.speaker_offset[static_cast<std::size_t>(speaker - 1)], k);
        if (cfg.regime == Regime::entangled && !e.is_neutral() &&
            cfg.interaction_strength != 0.0)
            v += cfg.interaction_strength *
                 row_dot(corpus.truth.interaction[static_cast<std::size_t>(e.index() - 1)]
                                                  [static_cast<std::size_t>(speaker - 1)],
                         k);
        target[static_cast<std::size_t>(k)] = v;
    }
    return target;
}

Matrix frame_features(const GeneratorConfig& cfg, const std::vector<SegmentInfo>& segments) {
    int total = 0;
    for (const SegmentInfo& seg : segments) {
        if (seg.duration < 1) throw InvalidConfig("segment with no frames");
        if (static_cast<int>(seg.features.size()) != cfg.segment_dim())
            throw ShapeError("segment feature dimension mismatch");
        total += seg.duration;
    }
    Matrix rows(static_cast<std::size_t>(total), static_cast<std::size_t>(cfg.frame_dim()));
    int t = 0;
    for (const SegmentInfo& seg : segments) {
        for (int f = 0; f < seg.duration; ++f, ++t) {
            double* row = rows.row(static_cast<std::size_t>(t));
            std::copy(seg.features.begin(), seg.features.end(), row);
            const std::size_t base = seg.features.size();
            row[base + 0] = (static_cast<double>(f) + 0.5) / static_cast<double>(seg.duration);
            row[base + 1] = (static_cast<double>(t) + 0.5) / static_cast<double>(total);
            row[base + 2] = static_cast<double>(seg.duration) / 20.0;
        }
    }
    return rows;
}

Corpus generate_synthetic_corpus(const GeneratorConfig& cfg) {
    validate(cfg);
    Corpus corpus;
    corpus.config = cfg;
    corpus.truth = make_ground_truth(cfg);
    const Rng root(cfg.seed);

    for (const CellRef& cell : corpus.cells()) {
        const std::uint64_t cell_code =
            static_cast<std::uint64_t>(cell.speaker) * 1000u +
            static_cast<std::uint64_t>(cell.emotion.is_neutral() ? 0 : cell.emotion.index());
        for (int sent = 0; sent < cfg.sentences; ++sent) {
            const SentenceTemplate tmpl = sentence_template(cfg, root, sent);
            Utterance utt;
            utt.sentence = sent;
            utt.speaker = cell.speaker;
            utt.emotion = cell.emotion;

            for (int g = 0; g < static_cast<int>(tmpl.segments.size()); ++g) {
                SegmentInfo seg;
                seg.context = tmpl.segments[static_cast<std::size_t>(g)].context;
                seg.features = segment_features(cfg, tmpl, g);
                seg.duration =
                    realized_duration(corpus, seg.features, cell.emotion, cell.speaker,
                                      tmpl.segments[static_cast<std::size_t>(g)].base_duration);
                utt.segments.push_back(std::move(seg));
            }

            utt.linguistic = frame_features(cfg, utt.segments);
            utt.statics = Matrix(utt.linguistic.rows, GeneratorConfig::static_dims);
            Rng noise = root.fork(kStreamNoise).fork(cell_code).fork(
                static_cast<std::uint64_t>(sent));

            for (std::size_t t = 0; t < utt.linguistic.rows; ++t) {
                const Vector target = ground_truth_target(
                    corpus,
                    std::span<const double>(utt.linguistic.row(t), utt.linguistic.cols),
                    cell.emotion, cell.speaker);
                double* srow = utt.statics.row(t);
                for (int k = 0; k < GeneratorConfig::static_dims; ++k) {
                    double v = target[static_cast<std::size_t>(k)];
                    // the V/UV flag stays noise-free so it remains a flag
                    if (cfg.noise_level > 0.0 && k != GeneratorConfig::vuv_channel)
                        v += cfg.noise_level * noise.normal();
                    srow[k] = v;
                }
            }
            corpus.utterances.push_back(std::move(utt));
        }
    }
    return corpus;
}

Matrix append_dynamic_features(const Matrix& statics) {
    const std::size_t T = statics.rows;
    const std::size_t K = statics.cols;
    if (T < 1) throw EmptyInput("append_dynamic_features: empty trajectory");
    Matrix out(T, 3 * K);
    auto at = [&](std::size_t t, std::size_t k) {
        const std::size_t tc = t >= T ? T - 1 : t;  // edge replication
        return statics.at(tc, k);
    };
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t prev = t == 0 ? 0 : t - 1;
        for (std::size_t k = 0; k < K; ++k) {
            const double xm = at(prev, k), x0 = statics.at(t, k), xp = at(t + 1, k);
            out.at(t, k) = x0;
            out.at(t, K + k) = 0.5 * (xp - xm);
            out.at(t, 2 * K + k) = xm - 2.0 * x0 + xp;
        }
    }
    return out;
}

std::array<int, 3> partition_counts(int n, const std::array<int, 3>& ratios) {
    if (ratios[0] + ratios[1] + ratios[2] != 100)
        throw InvalidConfig("split ratios must sum to 100");
    if (ratios[0] < 1 || ratios[1] < 1 || ratios[2] < 1)
        throw InvalidConfig("split ratios must be positive");
    int v, t;
    if (n >= 100) {
        v = (n / 100) * ratios[1];
        t = (n / 100) * ratios[2];
    } else {
        v = std::max(1, n * ratios[1] / 100);
        t = std::max(1, n * ratios[2] / 100);
    }
    const int train = n - v - t;
    if (train < 1 || v < 1 || t < 1)
        throw InvalidConfig("sentence pool of " + std::to_string(n) +
                            " is too small for the requested split");
    return {train, v, t};
}

DataSplit split_dataset(const Corpus& corpus, const SplitSpec& spec) {
    const int n = corpus.config.sentences;
    const auto counts = partition_counts(n, spec.ratios);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(order);

    DataSplit split;
    split.sentence_partition.assign(static_cast<std::size_t>(n), 2);
    for (int i = 0; i < counts[0]; ++i)
        split.sentence_partition[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
    for (int i = counts[0]; i < counts[0] + counts[1]; ++i)
        split.sentence_partition[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;

    for (std::size_t u = 0; u < corpus.utterances.size(); ++u) {
        const int p =
            split.sentence_partition[static_cast<std::size_t>(corpus.utterances[u].sentence)];
        (p == 0 ? split.train : p == 1 ? split.valid : split.test).push_back(u);
    }
    return split;
}

ExperimentConfig open_emotion_config(const Corpus& corpus, int target_speaker) {
    ExperimentConfig cfg;
    for (const CellRef& c : corpus.cells()) {
        if (c.speaker == target_speaker && !c.emotion.is_neutral()) {
            cfg.eval_cells.push_back({c, "open"});
            continue;  // excluded from training: extrapolation target
        }
        cfg.train_cells.push_back(c);
    }
    if (cfg.eval_cells.empty())
        throw InvalidConfig("speaker " + std::to_string(target_speaker) +
                            " has no emotional cells to hold out");
    return cfg;
}

ExperimentConfig closed_emotion_config(const Corpus& corpus, int target_speaker) {
    ExperimentConfig cfg;
    cfg.train_cells = corpus.cells();
    for (const CellRef& c : corpus.cells())
        if (c.speaker == target_speaker && !c.emotion.is_neutral())
            cfg.eval_cells.push_back({c, "closed"});
    if (cfg.eval_cells.empty())
        throw InvalidConfig("speaker " + std::to_string(target_speaker) +
                            " has no emotional cells to evaluate");
    return cfg;
}

ExperimentConfig sed_config(const Corpus& corpus, int speaker, EmotionIndex emotion) {
    const CellRef cell{speaker, emotion};
    if (!corpus.has_cell(cell))
        throw InvalidConfig("cell " + to_string(cell) + " does not exist in the corpus");
    ExperimentConfig cfg;
    cfg.train_cells = {cell};
    cfg.eval_cells = {{cell, "sed"}};
    return cfg;
}

namespace {

nlohmann::json cell_to_json(const CellRef& c) {
    nlohmann::json j;
    j["speaker"] = c.speaker;
    if (c.emotion.is_neutral())
        j["emotion"] = "neutral";
    else
        j["emotion"] = c.emotion.index();
    return j;
}

CellRef cell_from_json(const nlohmann::json& j) {
    CellRef c;
    c.speaker = j.at("speaker").get<int>();
    const auto& e = j.at("emotion");
    if (e.is_string()) {
        if (e.get<std::string>() != "neutral")
            throw InvalidConfig("emotion must be \"neutral\" or a 1-based index");
        c.emotion = EmotionIndex::neutral();
    } else {
        c.emotion = EmotionIndex::at(e.get<int>());
    }
    return c;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidConfig("cannot open experiment config: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("malformed experiment config " + path + ": " + e.what());
    }
    try {
        ExperimentConfig cfg;
        for (const auto& c : j.at("train")) cfg.train_cells.push_back(cell_from_json(c));
        for (const auto& c : j.at("eval")) {
            EvalCell ec;
            ec.cell = cell_from_json(c);
            ec.kind = c.value("kind", std::string("open"));
            if (ec.kind != "open" && ec.kind != "closed" && ec.kind != "sed")
                throw InvalidConfig("eval kind must be open, closed or sed");
            cfg.eval_cells.push_back(std::move(ec));
        }
        if (j.contains("split")) {
            const auto& sp = j["split"];
            if (sp.contains("ratios")) {
                const auto r = sp["ratios"];
                cfg.split.ratios = {r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>()};
            }
            if (sp.contains("seed")) {
                cfg.split.seed = sp["seed"].get<std::uint64_t>();
                cfg.split_seed_set = true;
            }
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig("malformed experiment config " + path + ": " + e.what());
    }
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
    nlohmann::json j;
    for (const CellRef& c : cfg.train_cells) j["train"].push_back(cell_to_json(c));
    for (const EvalCell& ec : cfg.eval_cells) {
        nlohmann::json c = cell_to_json(ec.cell);
        c["kind"] = ec.kind;
        j["eval"].push_back(std::move(c));
    }
    j["split"]["ratios"] = cfg.split.ratios;
    if (cfg.split_seed_set) j["split"]["seed"] = cfg.split.seed;
    std::ofstream os(path);
    if (!os) throw InvalidConfig("cannot write experiment config: " + path);
    os << j.dump(2) << "\n";
}

Matrix acoustic_targets(const Utterance& utt) {
    const std::size_t T = utt.statics.rows;
    Matrix cont(T, GeneratorConfig::continuous_dims);
    for (std::size_t t = 0; t < T; ++t)
        for (int k = 0; k < GeneratorConfig::continuous_dims; ++k)
            cont.at(t, static_cast<std::size_t>(k)) = utt.statics.at(t, static_cast<std::size_t>(k));
    const Matrix dyn = append_dynamic_features(cont);
    Matrix out(T, GeneratorConfig::acoustic_dim);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < dyn.cols; ++k) out.at(t, k) = dyn.at(t, k);
        out.at(t, dyn.cols) = utt.statics.at(t, GeneratorConfig::vuv_channel);
    }
    return out;
}

SampleSet assemble_training_view(const Corpus& corpus, const DataSplit& split,
                                 const ExperimentConfig& expcfg, Task task) {
    for (const CellRef& c : expcfg.train_cells)
        if (!corpus.has_cell(c))
            throw InvalidConfig("training cell " + to_string(c) + " does not exist");
    for (const EvalCell& ec : expcfg.eval_cells) {
        if (!corpus.has_cell(ec.cell))
            throw InvalidConfig("evaluation cell " + to_string(ec.cell) + " does not exist");
        if (cell_utterances(corpus, split, 2, ec.cell).empty())
            throw InvalidConfig("evaluation cell " + to_string(ec.cell) +
                                " has an empty test partition");
    }

    return partition_view(corpus, split, expcfg.train_cells, task, 0);
}

SampleSet partition_view(const Corpus& corpus, const DataSplit& split,
                         const std::vector<CellRef>& cells, Task task, int partition) {
    const std::vector<std::size_t>& idx = partition == 0   ? split.train
                                          : partition == 1 ? split.valid
                                                           : split.test;
    auto included = [&](const CellRef& c) {
        return std::find(cells.begin(), cells.end(), c) != cells.end();
    };

    SampleSet samples;
    for (const std::size_t u : idx) {
        const Utterance& utt = corpus.utterances[u];
        if (!included(utt.cell())) continue;
        if (task == Task::duration) {
            for (const SegmentInfo& seg : utt.segments) {
                Sample s;
                s.x = seg.features;
                s.speaker = utt.speaker;
                s.emotion = utt.emotion;
                s.target = {static_cast<double>(seg.duration)};
                samples.push_back(std::move(s));
            }
        } else {
            const Matrix targets = acoustic_targets(utt);
            for (std::size_t t = 0; t < targets.rows; ++t) {
                Sample s;
                s.x.assign(utt.linguistic.row(t), utt.linguistic.row(t) + utt.linguistic.cols);
                s.speaker = utt.speaker;
                s.emotion = utt.emotion;
                s.target.assign(targets.row(t), targets.row(t) + targets.cols);
                samples.push_back(std::move(s));
            }
        }
    }
    return samples;
}

std::vector<const Utterance*> cell_utterances(const Corpus& corpus, const DataSplit& split,
                                              int partition, const CellRef& cell) {
    const std::vector<std::size_t>* idx = partition == 0   ? &split.train
                                          : partition == 1 ? &split.valid
                                                           : &split.test;
    std::vector<const Utterance*> out;
    for (std::size_t u : *idx)
        if (corpus.utterances[u].cell() == cell) out.push_back(&corpus.utterances[u]);
    return out;
}

namespace {

std::string utterance_filename(const CellRef& cell, int sentence) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "utt_s%02d_e%d_n%04d.bin", cell.speaker,
                  cell.emotion.is_neutral() ? 0 : cell.emotion.index(), sentence);
    return buf;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream man(fs::path(dir) / "manifest.txt");
    if (!man) throw InvalidConfig("cannot write corpus manifest in " + dir);
    const GeneratorConfig& c = corpus.config;
    man << "factts-corpus 1\n";
    man << "speakers " << c.speakers << "\n";
    man << "emotions " << c.emotions << "\n";
    man << "emotional_speakers";
    for (int s : c.emotional_speakers) man << ' ' << s;
    man << "\n";
    man << "sentences " << c.sentences << "\n";
    man << "contexts " << c.contexts << "\n";
    man << "regime " << to_string(c.regime) << "\n";
    man << "noise " << io::fmt_double(c.noise_level) << "\n";
    man << "interaction " << io::fmt_double(c.interaction_strength) << "\n";
    man << "seed " << c.seed << "\n";
    man << "segments " << c.min_segments << ' ' << c.max_segments << "\n";
    man << "durations " << c.min_duration << ' ' << c.max_duration << "\n";
    man << "end\n";

    for (const Utterance& utt : corpus.utterances)
        save_utterance_record(utt, (fs::path(dir) / utterance_filename(utt.cell(), utt.sentence))
                                       .string());
}

void save_utterance_record(const Utterance& utt, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidConfig("cannot open corpus record for writing: " + path);
    io::write_u64_le(os, utt.segments.size());
    io::write_u64_le(os, utt.linguistic.rows);
    io::write_u64_le(os, utt.linguistic.cols);
    io::write_u64_le(os, utt.statics.cols);
    for (const SegmentInfo& seg : utt.segments) {
        io::write_u64_le(os, static_cast<std::uint64_t>(seg.context));
        io::write_u64_le(os, static_cast<std::uint64_t>(seg.duration));
        io::write_f64_le(os, seg.features);
    }
    io::write_f64_le(os, utt.linguistic.data);
    io::write_f64_le(os, utt.statics.data);
    if (!os) throw Error("write failure for corpus record: " + path);
}

Corpus load_corpus(const std::string& dir) {
    std::ifstream man(fs::path(dir) / "manifest.txt");
    if (!man) throw InvalidConfig("cannot open corpus manifest in " + dir);
    std::string line;
    if (!std::getline(man, line) || line != "factts-corpus 1")
        throw InvalidConfig("not a factts corpus: " + dir);

    GeneratorConfig cfg;
    cfg.emotional_speakers.clear();
    while (std::getline(man, line) && line != "end") {
        std::stringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "speakers") ss >> cfg.speakers;
        else if (key == "emotions") ss >> cfg.emotions;
        else if (key == "emotional_speakers") {
            int s;
            while (ss >> s) cfg.emotional_speakers.push_back(s);
        } else if (key == "sentences") ss >> cfg.sentences;
        else if (key == "contexts") ss >> cfg.contexts;
        else if (key == "regime") {
            std::string r;
            ss >> r;
            cfg.regime = regime_from_string(r);
        } else if (key == "noise") ss >> cfg.noise_level;
        else if (key == "interaction") ss >> cfg.interaction_strength;
        else if (key == "seed") ss >> cfg.seed;
        else if (key == "segments") ss >> cfg.min_segments >> cfg.max_segments;
        else if (key == "durations") ss >> cfg.min_duration >> cfg.max_duration;
        else throw InvalidConfig("unknown corpus manifest key: " + key);
    }
    if (line != "end") throw InvalidConfig("truncated corpus manifest in " + dir);

    Corpus corpus;
    corpus.config = cfg;
    corpus.truth = make_ground_truth(cfg);  // regenerable: derived from seed and dims
    for (const CellRef& cell : corpus.cells()) {
        for (int sent = 0; sent < cfg.sentences; ++sent) {
            const fs::path p = fs::path(dir) / utterance_filename(cell, sent);
            std::ifstream is(p, std::ios::binary);
            if (!is) throw InvalidConfig("missing corpus record: " + p.string());
            Utterance utt;
            utt.sentence = sent;
            utt.speaker = cell.speaker;
            utt.emotion = cell.emotion;
            const std::uint64_t n_seg = io::read_u64_le(is);
            const std::uint64_t T = io::read_u64_le(is);
            const std::uint64_t fdim = io::read_u64_le(is);
            const std::uint64_t sdim = io::read_u64_le(is);
            if (fdim != static_cast<std::uint64_t>(cfg.frame_dim()) ||
                sdim != static_cast<std::uint64_t>(GeneratorConfig::static_dims))
                throw InvalidConfig("corpus record dimensions disagree with the manifest");
            for (std::uint64_t i = 0; i < n_seg; ++i) {
                SegmentInfo seg;
                seg.context = static_cast<int>(io::read_u64_le(is));
                seg.duration = static_cast<int>(io::read_u64_le(is));
                seg.features.resize(static_cast<std::size_t>(cfg.segment_dim()));
                io::read_f64_le(is, seg.features);
                utt.segments.push_back(std::move(seg));
            }
            utt.linguistic = Matrix(T, fdim);
            io::read_f64_le(is, utt.linguistic.data);
            utt.statics = Matrix(T, sdim);
            io::read_f64_le(is, utt.statics.data);
            corpus.utterances.push_back(std::move(utt));
        }
    }
    return corpus;
}

}  // namespace factts
