#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "factts/factors.hpp"
#include "factts/linalg.hpp"
#include "factts/training.hpp"

namespace factts {

// In the additive regime the target factors exactly into a shared part plus
// speaker and emotion offsets; the entangled regime adds a speaker-dependent
// emotion term scaled by interaction_strength.
enum class Regime { additive, entangled };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct GeneratorConfig {
    int speakers = 6;
    int emotions = 2;
    // Speakers for which emotional cells exist; everyone has a neutral cell.
    std::vector<int> emotional_speakers = {1, 2};
    int sentences = 100;  // shared sentence pool; one utterance per cell and sentence
    int contexts = 24;    // number of one-hot context classes
    Regime regime = Regime::additive;
    double noise_level = 0.0;
    double interaction_strength = 0.0;
    std::uint64_t seed = 0;
    int min_segments = 3;
    int max_segments = 6;
    int min_duration = 4;   // base frames per segment
    int max_duration = 14;

    // feature layout
    int segment_numerics() const { return 4; }
    int segment_dim() const { return contexts + segment_numerics(); }
    int frame_numerics() const { return 3; }
    int frame_dim() const { return segment_dim() + frame_numerics(); }
    static constexpr int static_dims = 5;       // logF0-like, 3 cepstra-like, V/UV
    static constexpr int continuous_dims = 4;   // all but the V/UV flag
    static constexpr int vuv_channel = 4;
    // acoustic model output: statics+deltas+delta-deltas of the continuous
    // channels, then the V/UV flag
    static constexpr int acoustic_dim = 3 * continuous_dims + 1;
};

struct CellRef {
    int speaker = 1;
    EmotionIndex emotion = EmotionIndex::neutral();
    bool operator==(const CellRef&) const = default;
};

std::string to_string(const CellRef& c);

struct SegmentInfo {
    int context = 0;
    int duration = 0;  // realized frames, >= 2
    Vector features;   // segment-level vector (context one-hot + numerics)
};

struct Utterance {
    int sentence = 0;
    int speaker = 1;
    EmotionIndex emotion = EmotionIndex::neutral();
    std::vector<SegmentInfo> segments;
    Matrix linguistic;  // T x frame_dim
    Matrix statics;     // T x static_dims

    int frames() const { return static_cast<int>(linguistic.rows); }
    CellRef cell() const { return {speaker, emotion}; }
};

// The generating functions behind a corpus: affine maps over [x; 1] per
// static channel, plus affine per-segment duration offsets over [z; 1].
// Deterministically derived from (seed, dims), so they can be rebuilt for a
// corpus loaded from disk.
struct GroundTruth {
    Matrix base;                                 // static_dims x (frame_dim+1)
    std::vector<Matrix> emotion_offset;          // M entries
    std::vector<Matrix> speaker_offset;          // N entries
    std::vector<std::vector<Matrix>> interaction;  // [emotion][speaker]
    std::vector<Vector> dur_emotion;             // M entries, segment_dim+1
    std::vector<Vector> dur_speaker;             // N entries, segment_dim+1
};

struct Corpus {
    GeneratorConfig config;
    GroundTruth truth;
    std::vector<Utterance> utterances;

    std::vector<CellRef> cells() const;
    bool has_cell(const CellRef& c) const;
};

// Noise-free static target of the generating process at a frame vector.
Vector ground_truth_target(const Corpus& corpus, std::span<const double> x, EmotionIndex e,
                           int speaker);

// Frame-level feature rows for a segment sequence, using each segment's
// realized duration. One row per frame: the segment vector followed by the
// within-segment position, utterance position and normalized duration.
Matrix frame_features(const GeneratorConfig& cfg, const std::vector<SegmentInfo>& segments);

Corpus generate_synthetic_corpus(const GeneratorConfig& cfg);

// T x K static trajectory -> T x 3K [static | delta | delta-delta] blocks.
// delta_t = 0.5(x_{t+1} - x_{t-1}); deltadelta_t = x_{t-1} - 2 x_t + x_{t+1};
// boundaries replicate the edge frame.
Matrix append_dynamic_features(const Matrix& statics);

struct SplitSpec {
    std::array<int, 3> ratios{90, 5, 5};  // train : valid : test, sums to 100
    std::uint64_t seed = 0;
};

// Sentence-pool partition sizes. Each full hundred sentences contributes its
// ratio units to the valid/test partitions (500 @ 90:5:5 -> 450/25/25,
// 130 -> 120/5/5); pools under one hundred fall back to a proportional floor
// with a minimum of one.
std::array<int, 3> partition_counts(int n, const std::array<int, 3>& ratios);

struct DataSplit {
    std::vector<std::size_t> train, valid, test;  // utterance indices
    std::vector<int> sentence_partition;          // 0=train 1=valid 2=test per sentence
};

// Sentences are partitioned once and the assignment shared by every cell, so
// the same sentence never spans partitions.
DataSplit split_dataset(const Corpus& corpus, const SplitSpec& spec);

struct EvalCell {
    CellRef cell;
    std::string kind;  // "open" | "closed" | "sed"
};

struct ExperimentConfig {
    std::vector<CellRef> train_cells;
    std::vector<EvalCell> eval_cells;
    SplitSpec split;
    bool split_seed_set = false;  // when false, harness substitutes the corpus seed
};

// Table-style configurations: open excludes every emotional cell of the
// target speaker, closed includes all cells, sed trains on a single cell.
ExperimentConfig open_emotion_config(const Corpus& corpus, int target_speaker);
ExperimentConfig closed_emotion_config(const Corpus& corpus, int target_speaker);
ExperimentConfig sed_config(const Corpus& corpus, int speaker, EmotionIndex emotion);

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::string& path);

// Raw (unnormalized) training samples of all included cells' train-partition
// utterances. Duration task: one sample per segment, target = frame count.
// Acoustic task: one sample per frame, target = dynamic expansion of the
// continuous statics followed by the V/UV flag.
SampleSet assemble_training_view(const Corpus& corpus, const DataSplit& split,
                                 const ExperimentConfig& expcfg, Task task);

// Same sample extraction over an arbitrary partition (0=train 1=valid
// 2=test), without the eval-cell validation; used for validation sets.
SampleSet partition_view(const Corpus& corpus, const DataSplit& split,
                         const std::vector<CellRef>& cells, Task task, int partition);

// Utterances of one cell inside one partition (0=train 1=valid 2=test).
std::vector<const Utterance*> cell_utterances(const Corpus& corpus, const DataSplit& split,
                                              int partition, const CellRef& cell);

// Per-frame acoustic target rows for one utterance (same layout the
// acoustic training view uses).
Matrix acoustic_targets(const Utterance& utt);

void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

// One utterance in the corpus record format (binary, little-endian).
void save_utterance_record(const Utterance& utt, const std::string& path);

}  // namespace factts
