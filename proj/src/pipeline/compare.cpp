#include "iris/pipeline/compare.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "iris/error.hpp"

namespace iris::pipeline {

namespace {

std::map<std::string, const eval::EvalRecord*> index_by_id(
    const std::vector<eval::EvalRecord>& records, const char* label) {
    std::map<std::string, const eval::EvalRecord*> index;
    for (const auto& r : records)
        if (!index.emplace(r.sample_id, &r).second)
            throw ValidationError(std::string("duplicate sample id in ") + label + ": " +
                                  r.sample_id);
    return index;
}

}  // namespace

MethodComparison compare_methods(const std::vector<eval::EvalRecord>& a,
                                 const std::vector<eval::EvalRecord>& b, double alpha) {
    const auto index_a = index_by_id(a, "first record set");
    const auto index_b = index_by_id(b, "second record set");

    std::string only_a, only_b;
    for (const auto& [id, r] : index_a)
        if (!index_b.count(id)) only_a += (only_a.empty() ? "" : ", ") + id;
    for (const auto& [id, r] : index_b)
        if (!index_a.count(id)) only_b += (only_b.empty() ? "" : ", ") + id;
    if (!only_a.empty() || !only_b.empty())
        throw ValidationError("record sets disagree on sample ids; only in first: [" + only_a +
                              "], only in second: [" + only_b + "]");

    std::vector<double> e_a, e_b, f1_a, f1_b;
    for (const auto& [id, ra] : index_a) {
        const auto& rb = *index_b.at(id);
        e_a.push_back(ra->e);
        e_b.push_back(rb.e);
        f1_a.push_back(ra->f1.value_or(0.0));
        f1_b.push_back(rb.f1.value_or(0.0));
    }

    MethodComparison result;
    result.n = static_cast<int>(e_a.size());
    result.e_test = eval::paired_t_test(e_a, e_b, alpha);
    result.f1_test = eval::paired_t_test(f1_a, f1_b, alpha);
    const auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    result.mean_e_a = mean(e_a);
    result.mean_e_b = mean(e_b);
    result.mean_f1_a = mean(f1_a);
    result.mean_f1_b = mean(f1_b);
    return result;
}

}  // namespace iris::pipeline
