#ifndef TIV_SPLIT_HPP
#define TIV_SPLIT_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "tiv/errors.hpp"
#include "tiv/rng.hpp"

namespace tiv {

enum class SplitKind { iid, subsample_iid, exemplar_holdout };

inline std::string split_kind_name(SplitKind k) {
    switch (k) {
        case SplitKind::iid: return "iid";
        case SplitKind::subsample_iid: return "subsample_iid";
        default: return "exemplar_holdout";
    }
}

inline SplitKind split_kind_from_name(const std::string& s) {
    if (s == "iid") return SplitKind::iid;
    if (s == "subsample_iid" || s == "subsample") return SplitKind::subsample_iid;
    if (s == "exemplar_holdout" || s == "exemplar") return SplitKind::exemplar_holdout;
    throw ConfigError("unknown split kind '" + s + "'");
}

struct SplitSpec {
    SplitKind kind = SplitKind::iid;
    double train_fraction = 0.5;
    int subsample_factor = 10;
    double holdout_fraction = 0.10;  // used when holdout_count == 0
    int holdout_count = 0;           // explicit exemplars per class, 0 = fraction
    bool stratified = true;          // iid partitions stratify per class by default
    std::uint64_t seed = 0;

    void validate() const {
        if (train_fraction <= 0.0 || train_fraction >= 1.0)
            throw ConfigError("split: train_fraction must be in (0,1)");
        if (subsample_factor < 1) throw ConfigError("split: subsample_factor must be >= 1");
        if (holdout_count < 0) throw ConfigError("split: holdout_count must be >= 0");
        if (holdout_count == 0 && (holdout_fraction <= 0.0 || holdout_fraction >= 1.0))
            throw ConfigError("split: holdout_fraction must be in (0,1)");
    }
};

struct SplitResult {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

namespace split_detail {

inline SplitResult iid_partition(const std::vector<std::size_t>& candidates,
                                 const std::vector<int>* labels, const SplitSpec& spec) {
    SplitResult out;
    Rng rng = Rng::stream(spec.seed, 0x69696470u);
    if (spec.stratified && labels) {
        std::map<int, std::vector<std::size_t>> per_class;
        for (std::size_t i : candidates) per_class[(*labels)[i]].push_back(i);
        for (auto& [cls, idx] : per_class) {
            rng.shuffle(idx);
            const std::size_t n_train = static_cast<std::size_t>(
                std::lround(spec.train_fraction * static_cast<double>(idx.size())));
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < n_train ? out.train_indices : out.test_indices).push_back(idx[i]);
        }
    } else {
        std::vector<std::size_t> idx = candidates;
        rng.shuffle(idx);
        const std::size_t n_train = static_cast<std::size_t>(
            std::lround(spec.train_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? out.train_indices : out.test_indices).push_back(idx[i]);
    }
    std::sort(out.train_indices.begin(), out.train_indices.end());
    std::sort(out.test_indices.begin(), out.test_indices.end());
    return out;
}

}  // namespace split_detail

// Train/test partitioning. iid: seeded (stratified) partition. subsample_iid:
// keep every subsample_factor-th frame in frame order, then iid inside the
// survivors. exemplar_holdout: per class, whole exemplars move to the test
// side, so no frame of a held-out exemplar is ever trained on.
inline SplitResult split(std::size_t n, const std::vector<int>* labels,
                         const std::vector<std::string>* exemplar_ids, const SplitSpec& spec) {
    spec.validate();
    if (labels && labels->size() != n) throw ContractError("split: label count mismatch");
    if (exemplar_ids && !exemplar_ids->empty() && exemplar_ids->size() != n)
        throw ContractError("split: exemplar id count mismatch");

    switch (spec.kind) {
        case SplitKind::iid: {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), std::size_t{0});
            return split_detail::iid_partition(all, labels, spec);
        }
        case SplitKind::subsample_iid: {
            std::vector<std::size_t> kept;
            for (std::size_t i = 0; i < n; i += spec.subsample_factor) kept.push_back(i);
            return split_detail::iid_partition(kept, labels, spec);
        }
        case SplitKind::exemplar_holdout: {
            if (!exemplar_ids || exemplar_ids->empty())
                throw ConfigError("split: exemplar_holdout requires exemplar ids");
            if (!labels) throw ConfigError("split: exemplar_holdout requires labels");

            // class -> sorted unique exemplars
            std::map<int, std::vector<std::string>> class_exemplars;
            for (std::size_t i = 0; i < n; ++i) {
                auto& ex = class_exemplars[(*labels)[i]];
                if (std::find(ex.begin(), ex.end(), (*exemplar_ids)[i]) == ex.end())
                    ex.push_back((*exemplar_ids)[i]);
            }
            std::set<std::string> held_out;
            Rng rng = Rng::stream(spec.seed, 0x65786d70u);
            for (auto& [cls, exemplars] : class_exemplars) {
                std::sort(exemplars.begin(), exemplars.end());
                const std::size_t want =
                    spec.holdout_count > 0
                        ? static_cast<std::size_t>(spec.holdout_count)
                        : std::max<std::size_t>(
                              1, static_cast<std::size_t>(std::lround(
                                     spec.holdout_fraction *
                                     static_cast<double>(exemplars.size()))));
                if (exemplars.size() <= want)
                    throw DataError("split: class " + std::to_string(cls) + " has only " +
                                    std::to_string(exemplars.size()) +
                                    " exemplars, cannot hold out " + std::to_string(want));
                for (std::size_t j : rng.sample_without_replacement(exemplars.size(), want))
                    held_out.insert(exemplars[j]);
            }
            SplitResult out;
            for (std::size_t i = 0; i < n; ++i)
                (held_out.count((*exemplar_ids)[i]) ? out.test_indices : out.train_indices)
                    .push_back(i);
            return out;
        }
    }
    throw ConfigError("split: unknown kind");
}

}  // namespace tiv

#endif
