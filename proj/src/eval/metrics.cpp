#include "iris/eval/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "iris/error.hpp"

namespace iris::eval {

PixelCounts confusion_counts(const BinaryMask& pred, const BinaryMask& truth) {
    require_same_shape(pred, truth);
    PixelCounts c;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const bool p = pred.labels[i] != 0;
        const bool t = truth.labels[i] != 0;
        if (p && t)
            ++c.tp;
        else if (p && !t)
            ++c.fp;
        else if (!p && t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double segmentation_error(const BinaryMask& pred, const BinaryMask& truth) {
    require_same_shape(pred, truth);
    std::int64_t diff = 0;
    for (std::size_t i = 0; i < pred.labels.size(); ++i)
        diff += (pred.labels[i] != 0) ^ (truth.labels[i] != 0);
    return static_cast<double>(diff) / static_cast<double>(pred.labels.size());
}

std::optional<double> precision(const PixelCounts& c) {
    if (c.tp + c.fp == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

std::optional<double> recall(const PixelCounts& c) {
    if (c.tp + c.fn == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

std::optional<double> f1_score(const PixelCounts& c) {
    const auto p = precision(c);
    const auto r = recall(c);
    if (!p || !r || *p + *r == 0.0) return std::nullopt;
    return 2.0 * *p * *r / (*p + *r);
}

EvalRecord evaluate_pair(const std::string& sample_id, const BinaryMask& pred,
                         const BinaryMask& truth) {
    EvalRecord rec;
    rec.sample_id = sample_id;
    rec.counts = confusion_counts(pred, truth);
    rec.e = static_cast<double>(rec.counts.fp + rec.counts.fn) /
            static_cast<double>(rec.counts.total());
    rec.precision = precision(rec.counts);
    rec.recall = recall(rec.counts);
    rec.f1 = f1_score(rec.counts);
    return rec;
}

namespace {

std::pair<double, double> mean_and_sample_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

AggregateResult aggregate(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw ValidationError("aggregate: empty record list");
    std::vector<double> es, f1s;
    es.reserve(records.size());
    f1s.reserve(records.size());
    AggregateResult agg;
    for (const auto& r : records) {
        es.push_back(r.e);
        if (r.f1) {
            f1s.push_back(*r.f1);
        } else {
            f1s.push_back(0.0);
            ++agg.undefined_f1;
        }
    }
    std::tie(agg.mean_e, agg.std_e) = mean_and_sample_std(es);
    std::tie(agg.mean_f1, agg.std_f1) = mean_and_sample_std(f1s);
    agg.n = static_cast<int>(records.size());
    return agg;
}

void write_records_csv(const std::vector<EvalRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write records: " + path);
    out << "sample_id,tp,fp,tn,fn,e,precision,recall,f1\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.sample_id << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn
            << ',' << r.counts.fn << ',' << r.e << ',';
        if (r.precision) out << *r.precision;
        out << ',';
        if (r.recall) out << *r.recall;
        out << ',';
        if (r.f1) out << *r.f1;
        out << '\n';
    }
    if (!out) throw IoError("error while writing records: " + path);
}

std::vector<EvalRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open records: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("records file " + path + ": missing header");
    std::vector<EvalRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(iss, field, ',')) fields.push_back(field);
        while (fields.size() < 9) fields.emplace_back();
        if (fields.size() != 9)
            throw ParseError("records file " + path + " line " + std::to_string(line_no) +
                             ": expected 9 fields");
        EvalRecord r;
        r.sample_id = fields[0];
        try {
            r.counts.tp = std::stoll(fields[1]);
            r.counts.fp = std::stoll(fields[2]);
            r.counts.tn = std::stoll(fields[3]);
            r.counts.fn = std::stoll(fields[4]);
            r.e = std::stod(fields[5]);
            if (!fields[6].empty()) r.precision = std::stod(fields[6]);
            if (!fields[7].empty()) r.recall = std::stod(fields[7]);
            if (!fields[8].empty()) r.f1 = std::stod(fields[8]);
        } catch (const std::exception&) {
            throw ParseError("records file " + path + " line " + std::to_string(line_no) +
                             ": malformed numeric field");
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace iris::eval
