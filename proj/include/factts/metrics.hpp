#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factts/linalg.hpp"

namespace factts {

// Objective speech-synthesis metrics. All of them are pure functions; the
// report types at the bottom carry aggregated per-(model, cell) values.

inline constexpr double kDefaultFrameShiftMs = 5.0;

// sqrt(mean((pred - target)^2)) * frame_shift_ms, durations in frames.
double duration_rmse(std::span<const double> pred, std::span<const double> target,
                     double frame_shift_ms = kDefaultFrameShiftMs);

// A frame counts as voiced when its flag reaches 0.5.
inline bool is_voiced(double flag) { return flag >= 0.5; }

struct LogF0Metrics {
    double rmse = 0.0;
    double correlation = 0.0;  // population Pearson
    std::int64_t voiced_frames = 0;
};

// Computed over frames voiced in both pred and target. Throws
// InsufficientVoicedFrames below two joint frames and DegenerateVariance
// when either masked sequence is constant.
LogF0Metrics logf0_metrics(std::span<const double> pred, std::span<const double> target,
                           std::span<const double> pred_vuv,
                           std::span<const double> target_vuv);

// Mel-cepstral distortion in dB: mean over frames of
// (10/ln 10) * sqrt(2 * sum_c (pred - target)^2). The 0th coefficient is
// excluded upstream.
double mcd(const Matrix& pred, const Matrix& target);

// Fraction of frames whose thresholded flags disagree.
double vuv_error_rate(std::span<const double> pred_vuv, std::span<const double> target_vuv);

// Frame-count-weighted averaging of per-utterance metric values.
struct WeightedMean {
    double weighted_sum = 0.0;
    double total_weight = 0.0;

    void add(double value, double weight) {
        weighted_sum += value * weight;
        total_weight += weight;
    }
    double value() const;
    bool empty() const { return total_weight == 0.0; }
};

struct MetricRow {
    std::string model;
    int speaker = 0;
    std::string emotion;    // "neutral" or "e<i>"
    std::string test_kind;  // "open" | "closed" | "sed"
    std::string metric;
    double value = 0.0;
    std::int64_t n_frames = 0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
};

// CSV with columns model,speaker,emotion,test_kind,metric,value,n_frames.
void write_metric_csv(const MetricReport& report, const std::string& path);
MetricReport read_metric_csv(const std::string& path);  // ReportError on schema mismatch

// Human-readable grouping of the same rows.
void write_metric_summary(const MetricReport& report, const std::string& path);

}  // namespace factts
