#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "factts/corpus.hpp"
#include "factts/metrics.hpp"
#include "factts/network.hpp"
#include "factts/postproc.hpp"
#include "factts/training.hpp"

namespace factts {

// One model to train and evaluate under a data configuration.
struct ManifestEntry {
    std::string name;
    ArchKind arch = ArchKind::pm;
    Task task = Task::acoustic;
    ExperimentConfig experiment;
    std::vector<int> hidden_dims{32, 32};
    TrainConfig train;
    std::uint64_t init_seed = 0;
};

struct RunManifest {
    std::string corpus_path;
    std::optional<GeneratorConfig> generate;  // generate into corpus_path when set
    std::string out_dir;
    std::vector<ManifestEntry> entries;
};

struct EntryResult {
    std::string name;
    bool ok = false;
    std::string error;  // empty on success
};

struct RunResult {
    std::vector<EntryResult> entries;
    MetricReport combined;
};

// Execute every manifest entry: assemble the training view, train, evaluate
// each configured cell and write per-entry model/curves/metrics files plus a
// combined report.csv and summary.txt under out_dir. A failing entry is
// recorded and the remaining entries still run. Fully deterministic given
// the seeds in the manifest.
RunResult run_experiment(const RunManifest& manifest);

// Load a manifest JSON (whose entries reference experiments as presets like
// {"type":"open","speaker":1} or {"type":"file","path":...}) and run it.
RunResult run_manifest_file(const std::string& path);

// Model evaluation over the experiment's eval cells; rows are grouped per
// cell with the metrics appropriate to the task.
MetricReport evaluate_model(const Network& net, const NormStats& stats, const Corpus& corpus,
                            const DataSplit& split, const ExperimentConfig& expcfg, Task task);

// One utterance through the acoustic pipeline: per-frame prediction,
// denormalization, MLPG smoothing and GV scaling. Returns the static
// trajectory (T x continuous dims) and the predicted V/UV flags.
struct SynthesizedUtterance {
    Matrix statics;
    Vector vuv;
};

SynthesizedUtterance synthesize_utterance(const Network& net, const NormStats& stats,
                                          const Matrix& frame_inputs, const EmotionId& e,
                                          const SpeakerId& s, const GlobalVariance& gv);
// Variant without GV scaling when gv is null.
SynthesizedUtterance synthesize_utterance(const Network& net, const NormStats& stats,
                                          const Matrix& frame_inputs, const EmotionId& e,
                                          const SpeakerId& s, const GlobalVariance* gv);

// GV of a speaker's neutral training utterances (pooled over frames).
GlobalVariance neutral_global_variance(const Corpus& corpus, const DataSplit& split,
                                       int speaker);

// Side-by-side view of one or more metric reports.
struct Comparison {
    std::vector<std::string> columns;  // "<model>:<kind>" or with "@r<i>" when ambiguous
    struct Row {
        int speaker = 0;
        std::string emotion;
        std::string metric;
        std::vector<std::optional<double>> values;             // per column; absent stays empty
        std::vector<std::pair<std::string, double>> deltas;    // labeled differences
        std::string best;                                      // winning column label
    };
    std::vector<Row> rows;
};

Comparison compare_reports(const std::vector<std::string>& paths);
void write_comparison(const Comparison& cmp, std::ostream& os);

// CLI entry point (subcommands: gen-corpus, train, synth, eval, report,
// compare). Returns the process exit code: 0 success, 1 configuration
// error, 2 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace factts
