#include "factts/metrics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "factts/errors.hpp"
#include "factts/io.hpp"

namespace factts {

namespace {

constexpr double kMcdConstant = 4.342944819032518276511289189166;  // 10 / ln 10

}  // namespace

double duration_rmse(std::span<const double> pred, std::span<const double> target,
                     double frame_shift_ms) {
    if (pred.empty()) throw EmptyInput("duration_rmse: empty input");
    if (pred.size() != target.size()) throw ShapeError("duration_rmse: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size())) * frame_shift_ms;
}

LogF0Metrics logf0_metrics(std::span<const double> pred, std::span<const double> target,
                           std::span<const double> pred_vuv,
                           std::span<const double> target_vuv) {
    if (pred.size() != target.size() || pred.size() != pred_vuv.size() ||
        pred.size() != target_vuv.size())
        throw ShapeError("logf0_metrics: length mismatch");

    std::vector<std::size_t> joint;
    for (std::size_t t = 0; t < pred.size(); ++t)
        if (is_voiced(pred_vuv[t]) && is_voiced(target_vuv[t])) joint.push_back(t);
    if (joint.size() < 2)
        throw InsufficientVoicedFrames("logf0_metrics: fewer than two jointly-voiced frames");

    const double n = static_cast<double>(joint.size());
    double mp = 0.0, mt = 0.0, sq = 0.0;
    for (std::size_t t : joint) {
        mp += pred[t];
        mt += target[t];
        const double d = pred[t] - target[t];
        sq += d * d;
    }
    mp /= n;
    mt /= n;
    double vp = 0.0, vt = 0.0, cov = 0.0;
    for (std::size_t t : joint) {
        const double dp = pred[t] - mp;
        const double dt = target[t] - mt;
        vp += dp * dp;
        vt += dt * dt;
        cov += dp * dt;
    }
    if (vp == 0.0 || vt == 0.0)
        throw DegenerateVariance("logf0_metrics: constant sequence on voiced frames");

    LogF0Metrics m;
    m.rmse = std::sqrt(sq / n);
    // single sqrt of the product so corr(x, x) is exactly 1
    m.correlation = cov / std::sqrt(vp * vt);
    m.voiced_frames = static_cast<std::int64_t>(joint.size());
    return m;
}

double mcd(const Matrix& pred, const Matrix& target) {
    if (pred.rows != target.rows || pred.cols != target.cols)
        throw ShapeError("mcd: shape mismatch");
    if (pred.rows == 0 || pred.cols == 0) throw EmptyInput("mcd: empty input");
    double acc = 0.0;
    for (std::size_t t = 0; t < pred.rows; ++t) {
        double sq = 0.0;
        for (std::size_t c = 0; c < pred.cols; ++c) {
            const double d = pred.at(t, c) - target.at(t, c);
            sq += d * d;
        }
        acc += kMcdConstant * std::sqrt(2.0 * sq);
    }
    return acc / static_cast<double>(pred.rows);
}

double vuv_error_rate(std::span<const double> pred_vuv, std::span<const double> target_vuv) {
    if (pred_vuv.empty()) throw EmptyInput("vuv_error_rate: empty input");
    if (pred_vuv.size() != target_vuv.size()) throw ShapeError("vuv_error_rate: length mismatch");
    std::size_t wrong = 0;
    for (std::size_t t = 0; t < pred_vuv.size(); ++t)
        if (is_voiced(pred_vuv[t]) != is_voiced(target_vuv[t])) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(pred_vuv.size());
}

double WeightedMean::value() const {
    if (total_weight == 0.0) throw EmptyInput("WeightedMean: no contributions");
    return weighted_sum / total_weight;
}

void write_metric_csv(const MetricReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidConfig("cannot open metrics file for writing: " + path);
    os << "model,speaker,emotion,test_kind,metric,value,n_frames\n";
    for (const MetricRow& r : report.rows)
        os << r.model << ',' << r.speaker << ',' << r.emotion << ',' << r.test_kind << ','
           << r.metric << ',' << io::fmt_double(r.value) << ',' << r.n_frames << '\n';
}

MetricReport read_metric_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ReportError("cannot open metrics file: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "model,speaker,emotion,test_kind,metric,value,n_frames")
        throw ReportError("unexpected metrics schema in " + path);
    MetricReport report;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        MetricRow r;
        std::string speaker, value, frames;
        if (!std::getline(ss, r.model, ',') || !std::getline(ss, speaker, ',') ||
            !std::getline(ss, r.emotion, ',') || !std::getline(ss, r.test_kind, ',') ||
            !std::getline(ss, r.metric, ',') || !std::getline(ss, value, ',') ||
            !std::getline(ss, frames))
            throw ReportError("malformed metrics row in " + path + ": " + line);
        try {
            r.speaker = std::stoi(speaker);
            r.value = std::stod(value);
            r.n_frames = std::stoll(frames);
        } catch (const std::exception&) {
            throw ReportError("malformed metrics row in " + path + ": " + line);
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

void write_metric_summary(const MetricReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidConfig("cannot open summary file for writing: " + path);
    // group rows by (model, cell, kind)
    std::map<std::string, std::vector<const MetricRow*>> groups;
    std::vector<std::string> order;
    for (const MetricRow& r : report.rows) {
        const std::string key = r.model + " | speaker " + std::to_string(r.speaker) + " " +
                                r.emotion + " | " + r.test_kind;
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(&r);
    }
    for (const std::string& key : order) {
        os << key << "\n";
        for (const MetricRow* r : groups[key]) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6g", r->value);
            os << "  " << r->metric << " = " << buf << "  (n=" << r->n_frames << ")\n";
        }
    }
}

}  // namespace factts
