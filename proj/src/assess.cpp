#include "devtox/assess.hpp"

#include "devtox/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace devtox {

CvSplit cv_split(const Dataset& data, double fraction, Rng& rng) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("cv fraction must lie in [0,1)");
    const auto& levels = data.dose_levels();
    const auto& sizes = data.group_sizes();
    for (std::size_t d = 0; d < levels.size(); ++d) {
        if (sizes[d] < 2) {
            throw std::invalid_argument("dose group " + format_double(levels[d]) +
                                        " has fewer than 2 dams; cannot hold one out");
        }
    }
    std::vector<std::vector<std::size_t>> members(levels.size());
    for (std::size_t i = 0; i < data.size(); ++i) members[data.dose_index()[i]].push_back(i);
    std::vector<char> in_test(data.size(), 0);
    for (std::size_t d = 0; d < levels.size(); ++d) {
        auto& idx = members[d];
        const int n_d = static_cast<int>(idx.size());
        const int k = std::clamp(static_cast<int>(std::lround(fraction * n_d)), 1, n_d - 1);
        // Partial Fisher-Yates: the first k positions form the test set.
        for (int t = 0; t < k; ++t) {
            const int pick = t + std::min(n_d - t - 1, static_cast<int>(rng.uniform() * (n_d - t)));
            std::swap(idx[t], idx[pick]);
            in_test[idx[t]] = 1;
        }
    }
    std::vector<DamRecord> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (in_test[i] ? test : train).push_back(data.records()[i]);
    }
    return {Dataset(std::move(train)), Dataset(std::move(test)), fraction};
}

std::optional<double> endpoint_ratio(int m, int R, int y, Endpoint e) {
    switch (e) {
        case Endpoint::Embryolethality: return static_cast<double>(R) / m;
        case Endpoint::Malformation:
            if (m - R == 0) return std::nullopt;
            return static_cast<double>(y) / (m - R);
        case Endpoint::Combined: return static_cast<double>(R + y) / m;
    }
    return std::nullopt;
}

namespace {

struct DoseDraws {
    std::vector<double> ratios;
    int skipped = 0;
};

DoseDraws ratios_at(const PredictiveDraws& pred, double dose, Endpoint e) {
    const auto it = std::find(pred.doses.begin(), pred.doses.end(), dose);
    if (it == pred.doses.end()) {
        throw std::invalid_argument("no predictive draws at test dose " + format_double(dose));
    }
    DoseDraws out;
    for (const auto& s : pred.samples[it - pred.doses.begin()]) {
        const auto r = endpoint_ratio(s.m, s.R, s.y, e);
        if (r) {
            out.ratios.push_back(*r);
        } else {
            ++out.skipped;
        }
    }
    if (out.ratios.empty()) {
        throw std::runtime_error("no usable predictive draws at dose " + format_double(dose));
    }
    return out;
}

}  // namespace

PplResult ppl(const Dataset& test, const PredictiveDraws& predictive, Endpoint e) {
    PplResult out;
    for (double dose : test.dose_levels()) {
        const auto draws = ratios_at(predictive, dose, e);
        out.skipped_draws += draws.skipped;
        const double n = static_cast<double>(draws.ratios.size());
        const double mean = std::accumulate(draws.ratios.begin(), draws.ratios.end(), 0.0) / n;
        double var = 0.0;
        for (double r : draws.ratios) var += (r - mean) * (r - mean);
        var /= n;
        int used = 0;
        for (const auto& rec : test.records()) {
            if (rec.dose != dose) continue;
            const auto obs = endpoint_ratio(rec.m, rec.R, rec.y, e);
            if (!obs) {
                ++out.skipped_test;
                continue;
            }
            out.G += (*obs - mean) * (*obs - mean);
            ++used;
        }
        out.P += used * var;
    }
    return out;
}

IntervalScoreResult interval_score(const Dataset& test, const PredictiveDraws& predictive, Endpoint e,
                                   double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("interval_score: alpha must lie in (0,1)");
    IntervalScoreResult out;
    for (double dose : test.dose_levels()) {
        const auto draws = ratios_at(predictive, dose, e);
        const double lo = quantile_type7(draws.ratios, 0.5 * alpha);
        const double hi = quantile_type7(draws.ratios, 1.0 - 0.5 * alpha);
        for (const auto& rec : test.records()) {
            if (rec.dose != dose) continue;
            const auto obs = endpoint_ratio(rec.m, rec.R, rec.y, e);
            if (!obs) {
                ++out.skipped_test;
                continue;
            }
            out.S += hi - lo;
            if (*obs < lo) out.S += 2.0 / alpha * (lo - *obs);
            if (*obs > hi) out.S += 2.0 / alpha * (*obs - hi);
        }
    }
    return out;
}

std::vector<ComparisonRow> compare_endpoints(const std::string& model, const Dataset& test,
                                             const PredictiveDraws& predictive) {
    std::vector<ComparisonRow> rows;
    for (Endpoint e : kEndpoints) {
        const auto p = ppl(test, predictive, e);
        const auto s = interval_score(test, predictive, e);
        rows.push_back({model, e, p.G, p.P, s.S, p.skipped_test});
    }
    return rows;
}

void write_comparison(std::ostream& out, const ComparisonReport& report) {
    out << "model,endpoint,G,P,G_plus_P,S,skipped_test_dams\n";
    for (const auto& r : report.rows) {
        out << r.model << ',' << to_string(r.endpoint) << ',' << format_double(r.G) << ','
            << format_double(r.P) << ',' << format_double(r.G + r.P) << ',' << format_double(r.S) << ','
            << r.skipped << '\n';
    }
}

}  // namespace devtox
