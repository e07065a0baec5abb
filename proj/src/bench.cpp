#include "fusiongen/bench.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "fusiongen/csp_lda.hpp"

namespace fusiongen {

namespace {

std::vector<std::string> subject_order(const Dataset& ds) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const Trial& t : ds.trials)
        if (seen.insert(t.subject_id).second) order.push_back(t.subject_id);
    return order;
}

Dataset subset(const Dataset& ds, const std::vector<int>& idx) {
    Dataset out;
    out.channel_names = ds.channel_names;
    out.class_names = ds.class_names;
    out.sample_rate_hz = ds.sample_rate_hz;
    for (int i : idx) out.trials.push_back(ds.trials[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<const Trial*> trial_ptrs(const Dataset& ds) {
    std::vector<const Trial*> ptrs;
    ptrs.reserve(ds.trials.size());
    for (const Trial& t : ds.trials) ptrs.push_back(&t);
    return ptrs;
}

void audit_disjoint(const std::vector<int>& fit_uids, const std::vector<int>& test_uids,
                    const char* where) {
    std::set<int> test_set(test_uids.begin(), test_uids.end());
    for (int u : fit_uids)
        if (test_set.count(u))
            throw std::logic_error(std::string("leakage audit failed in ") + where +
                                   ": test trial " + std::to_string(u) + " used for fitting");
}

struct AugSpec {
    std::string baseline;  // empty when no baseline
    bool fusion = false;
};

AugSpec parse_augmentation(const std::string& s) {
    AugSpec spec;
    if (s.empty() || s == "none") return spec;
    const std::string suffix = "+fusiongen";
    if (s == "fusiongen") {
        spec.fusion = true;
        return spec;
    }
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        spec.fusion = true;
        spec.baseline = s.substr(0, s.size() - suffix.size());
    } else {
        spec.baseline = s;
    }
    static const std::set<std::string> known = {"noise", "scale",  "flip", "cutresize",
                                                "fshift", "cr", "dwt"};
    if (!known.count(spec.baseline))
        throw std::runtime_error("unknown augmentation '" + s + "'");
    return spec;
}

/// Aligns a train/test split: references come from train trials only, grouped
/// by scope; test trials reuse their group's reference (pooled train
/// reference when their group contributed no train trials).
struct AlignedSplit {
    Dataset train, test;
};

AlignedSplit align_train_test(const Dataset& train, const Dataset& test, AlignScope scope,
                              double epsilon_rel) {
    auto key_of = [&](const Trial& t) -> std::string {
        switch (scope) {
            case AlignScope::Session: return t.subject_id + "\x1f" + t.session_id;
            case AlignScope::Subject: return t.subject_id;
            case AlignScope::Global: return std::string();
        }
        return std::string();
    };
    std::map<std::string, std::vector<const Trial*>> groups;
    for (const Trial& t : train.trials) groups[key_of(t)].push_back(&t);
    std::map<std::string, AlignmentReference> refs;
    for (const auto& [key, trials] : groups) refs[key] = compute_reference(trials, epsilon_rel);
    const AlignmentReference pooled = compute_reference(trial_ptrs(train), epsilon_rel);

    AlignedSplit out{train, test};
    for (Trial& t : out.train.trials) t = apply_reference(refs.at(key_of(t)), t);
    for (Trial& t : out.test.trials) {
        const auto it = refs.find(key_of(t));
        t = apply_reference(it != refs.end() ? it->second : pooled, t);
    }
    return out;
}

/// Builds the synthetic extension of one fold's training pool.
std::vector<Trial> make_extra_trials(const ExperimentConfig& cfg, const AugSpec& spec,
                                     const Dataset& baseline_pool, const Dataset& dae_train,
                                     const std::vector<const Trial*>& fusion_targets,
                                     const std::vector<const Trial*>& fusion_sources,
                                     const Dataset& meta, std::uint64_t fold_seed,
                                     const ChannelPairMap* pair_map) {
    std::vector<Trial> extra;
    if (cfg.n_generated_per_class <= 0) return extra;
    if (!spec.baseline.empty()) {
        Rng rng(derive_seed(fold_seed, 0x41u));
        std::map<int, std::vector<const Trial*>> by_class;
        for (const Trial& t : baseline_pool.trials) by_class[t.label].push_back(&t);
        for (const auto& [label, pool] : by_class) {
            (void)label;
            for (int i = 0; i < cfg.n_generated_per_class; ++i)
                extra.push_back(
                    apply_baseline(spec.baseline, pool, cfg.baseline_params, pair_map, rng));
        }
    }
    if (spec.fusion) {
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(fold_seed, 0x42u);
        const TrainResult trained = train_dae(dae_train, tc, cfg.arch);
        FusionConfig fc;
        fc.alpha = cfg.alpha;
        Dataset gen = generate_augmented_set(trained.model, fusion_targets, fusion_sources,
                                             cfg.n_generated_per_class, fc,
                                             derive_seed(fold_seed, 0x43u), meta);
        for (Trial& t : gen.trials) extra.push_back(std::move(t));
    }
    return extra;
}

int clamp_filters(const ExperimentConfig& cfg, const Dataset& pool) {
    std::set<int> classes;
    for (const Trial& t : pool.trials) classes.insert(t.label);
    const int C = pool.trials.empty() ? 1 : pool.trials.front().channels();
    const int available = classes.size() == 2
                              ? C
                              : C * static_cast<int>(classes.size());
    return std::min(cfg.n_filters, available);
}

double fold_std(const std::vector<double>& accs, double mean) {
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    return accs.empty() ? 0.0 : std::sqrt(var / static_cast<double>(accs.size()));
}

/// Runs tasks (fold, repeat) on `jobs` threads; exceptions are rethrown.
void run_task_grid(int n_folds, int repeats, int jobs,
                   const std::function<double(int, int)>& task,
                   std::vector<std::vector<double>>& results) {
    results.assign(static_cast<std::size_t>(n_folds),
                   std::vector<double>(static_cast<std::size_t>(repeats), 0.0));
    const int total = n_folds * repeats;
    if (jobs <= 1) {
        for (int i = 0; i < total; ++i)
            results[static_cast<std::size_t>(i / repeats)][static_cast<std::size_t>(i % repeats)] =
                task(i / repeats, i % repeats);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= total) return;
            try {
                results[static_cast<std::size_t>(i / repeats)]
                       [static_cast<std::size_t>(i % repeats)] = task(i / repeats, i % repeats);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    for (int j = 0; j < std::min(jobs, total); ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> split_temporal_indices(
    const std::vector<int>& labels, int n_train_per_class) {
    if (n_train_per_class < 1)
        throw std::runtime_error("split_temporal: n_train_per_class must be >= 1");
    std::map<int, int> taken;
    std::vector<int> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (taken[labels[i]] < n_train_per_class) {
            train.push_back(static_cast<int>(i));
            taken[labels[i]]++;
        } else {
            test.push_back(static_cast<int>(i));
        }
    }
    return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_temporal(const Dataset& ds, int n_train_per_class) {
    std::vector<int> labels;
    labels.reserve(ds.trials.size());
    for (const Trial& t : ds.trials) labels.push_back(t.label);
    const auto [train_idx, test_idx] = split_temporal_indices(labels, n_train_per_class);
    return {subset(ds, train_idx), subset(ds, test_idx)};
}

ResultTable run_within_subject(const Dataset& ds, const ExperimentConfig& cfg) {
    validate_dataset(ds);
    if (cfg.repeats < 1) throw std::runtime_error("bench: repeats must be >= 1");
    const AugSpec spec = parse_augmentation(cfg.augmentation);
    ChannelPairMap pair_map;
    const bool needs_pairs = spec.baseline == "cr";
    if (needs_pairs) {
        if (cfg.pair_map_path.empty())
            throw std::runtime_error("bench: 'cr' augmentation needs --pair-map");
        pair_map = load_pair_map(cfg.pair_map_path, ds);
    }

    const std::vector<std::string> subjects = subject_order(ds);

    // Per-fold fixed state: subject splits and aligned data (no randomness).
    struct Fold {
        std::string subject;
        AlignedSplit aligned;
    };
    std::vector<Fold> folds;
    for (const std::string& subject : subjects) {
        std::vector<int> idx;
        std::vector<int> labels;
        for (std::size_t i = 0; i < ds.trials.size(); ++i) {
            if (ds.trials[i].subject_id != subject) continue;
            idx.push_back(static_cast<int>(i));
            labels.push_back(ds.trials[i].label);
        }
        const auto [train_pos, test_pos] = split_temporal_indices(labels, cfg.n_train_per_class);
        std::vector<int> train_uids, test_uids;
        for (int p : train_pos) train_uids.push_back(idx[static_cast<std::size_t>(p)]);
        for (int p : test_pos) test_uids.push_back(idx[static_cast<std::size_t>(p)]);
        audit_disjoint(train_uids, test_uids, "within-subject split");
        if (test_uids.empty())
            throw std::runtime_error("bench: subject " + subject + " has no test trials");
        folds.push_back(Fold{subject, align_train_test(subset(ds, train_uids),
                                                       subset(ds, test_uids), cfg.scope,
                                                       cfg.epsilon_rel)});
    }

    auto task = [&](int fi, int rep) -> double {
        const Fold& fold = folds[static_cast<std::size_t>(fi)];
        const std::uint64_t fold_seed =
            derive_seed(cfg.master_seed, static_cast<std::uint64_t>(fi),
                        static_cast<std::uint64_t>(rep));
        // Within-subject: the generator trains on this subject's train pool;
        // fusion pairs draw target and source from that same pool.
        Dataset pool = fold.aligned.train;
        const auto ptrs = trial_ptrs(fold.aligned.train);
        std::vector<Trial> extra =
            make_extra_trials(cfg, spec, fold.aligned.train, fold.aligned.train, ptrs, ptrs,
                              fold.aligned.train, fold_seed, needs_pairs ? &pair_map : nullptr);
        for (Trial& t : extra) pool.trials.push_back(std::move(t));
        return evaluate_accuracy(pool, fold.aligned.test, clamp_filters(cfg, pool));
    };

    std::vector<std::vector<double>> accs;
    run_task_grid(static_cast<int>(folds.size()), cfg.repeats, cfg.jobs, task, accs);

    ResultTable table;
    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        ResultRow row;
        row.dataset = cfg.dataset_name;
        row.subject = folds[fi].subject;
        row.mode = "within";
        row.trials = cfg.n_train_per_class;
        row.method = cfg.augmentation.empty() ? "none" : cfg.augmentation;
        row.seed_accs = accs[fi];
        double sum = 0.0;
        for (double a : row.seed_accs) sum += a;
        row.mean_acc = sum / static_cast<double>(row.seed_accs.size());
        row.std_acc = fold_std(row.seed_accs, row.mean_acc);
        table.rows.push_back(std::move(row));
    }
    return table;
}

ResultTable run_cross_subject(const Dataset& ds, const ExperimentConfig& cfg) {
    validate_dataset(ds);
    if (cfg.repeats < 1) throw std::runtime_error("bench: repeats must be >= 1");
    const AugSpec spec = parse_augmentation(cfg.augmentation);
    ChannelPairMap pair_map;
    const bool needs_pairs = spec.baseline == "cr";
    if (needs_pairs) {
        if (cfg.pair_map_path.empty())
            throw std::runtime_error("bench: 'cr' augmentation needs --pair-map");
        pair_map = load_pair_map(cfg.pair_map_path, ds);
    }

    const std::vector<std::string> subjects = subject_order(ds);
    if (subjects.size() < 2)
        throw std::runtime_error("bench: cross-subject mode needs at least two subjects");

    struct Fold {
        std::string subject;
        Dataset source_aligned;  // all other subjects, aligned per scope group
        Dataset few_aligned;     // held-out subject's first n_train/class
        Dataset test_aligned;    // remainder, whitened with the few-shot reference
        Dataset dae_pool;        // source + few-shot union
    };
    std::vector<Fold> folds;
    for (const std::string& subject : subjects) {
        std::vector<int> tgt_idx, src_idx, tgt_labels;
        for (std::size_t i = 0; i < ds.trials.size(); ++i) {
            if (ds.trials[i].subject_id == subject) {
                tgt_idx.push_back(static_cast<int>(i));
                tgt_labels.push_back(ds.trials[i].label);
            } else {
                src_idx.push_back(static_cast<int>(i));
            }
        }
        const auto [few_pos, test_pos] = split_temporal_indices(tgt_labels, cfg.n_train_per_class);
        std::vector<int> few_uids, test_uids;
        for (int p : few_pos) few_uids.push_back(tgt_idx[static_cast<std::size_t>(p)]);
        for (int p : test_pos) test_uids.push_back(tgt_idx[static_cast<std::size_t>(p)]);
        if (test_uids.empty())
            throw std::runtime_error("bench: subject " + subject + " has no test trials");
        std::vector<int> fit_uids = src_idx;
        fit_uids.insert(fit_uids.end(), few_uids.begin(), few_uids.end());
        audit_disjoint(fit_uids, test_uids, "cross-subject split");

        Fold fold;
        fold.subject = subject;
        fold.source_aligned = align_dataset(subset(ds, src_idx), cfg.scope, cfg.epsilon_rel).first;
        const Dataset few_raw = subset(ds, few_uids);
        const AlignmentReference few_ref = compute_reference(trial_ptrs(few_raw), cfg.epsilon_rel);
        fold.few_aligned = few_raw;
        for (Trial& t : fold.few_aligned.trials) t = apply_reference(few_ref, t);
        fold.test_aligned = subset(ds, test_uids);
        for (Trial& t : fold.test_aligned.trials) t = apply_reference(few_ref, t);
        fold.dae_pool = fold.source_aligned;
        for (const Trial& t : fold.few_aligned.trials) fold.dae_pool.trials.push_back(t);
        folds.push_back(std::move(fold));
    }

    auto task = [&](int fi, int rep) -> double {
        const Fold& fold = folds[static_cast<std::size_t>(fi)];
        const std::uint64_t fold_seed =
            derive_seed(cfg.master_seed, static_cast<std::uint64_t>(fi),
                        static_cast<std::uint64_t>(rep));
        // Cross-subject: fusion targets are the few-shot trials, fusion
        // sources come from the source subjects; baselines perturb the
        // few-shot pool. The classifier pool is sources + few-shot + extra.
        Dataset pool = fold.dae_pool;
        std::vector<Trial> extra = make_extra_trials(
            cfg, spec, fold.few_aligned, fold.dae_pool, trial_ptrs(fold.few_aligned),
            trial_ptrs(fold.source_aligned), fold.few_aligned, fold_seed,
            needs_pairs ? &pair_map : nullptr);
        for (Trial& t : extra) pool.trials.push_back(std::move(t));
        return evaluate_accuracy(pool, fold.test_aligned, clamp_filters(cfg, pool));
    };

    std::vector<std::vector<double>> accs;
    run_task_grid(static_cast<int>(folds.size()), cfg.repeats, cfg.jobs, task, accs);

    ResultTable table;
    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        ResultRow row;
        row.dataset = cfg.dataset_name;
        row.subject = folds[fi].subject;
        row.mode = "cross";
        row.trials = cfg.n_train_per_class;
        row.method = cfg.augmentation.empty() ? "none" : cfg.augmentation;
        row.seed_accs = accs[fi];
        double sum = 0.0;
        for (double a : row.seed_accs) sum += a;
        row.mean_acc = sum / static_cast<double>(row.seed_accs.size());
        row.std_acc = fold_std(row.seed_accs, row.mean_acc);
        table.rows.push_back(std::move(row));
    }
    return table;
}

SpectrumReport compression_spectrum_report(const Dataset& ds,
                                           const std::vector<std::array<int, 3>>& profiles,
                                           const TrainConfig& cfg,
                                           const std::filesystem::path& out_dir) {
    validate_dataset(ds);
    if (profiles.empty()) throw std::runtime_error("spectrum: no stride profiles");
    if (ds.n_trials() < 2) throw std::runtime_error("spectrum: need at least two trials");

    // Temporal hold-out: the trailing 20% of trials are never trained on.
    const int n_hold = std::max(1, ds.n_trials() / 5);
    std::vector<int> train_idx, hold_idx;
    for (int i = 0; i < ds.n_trials(); ++i)
        (i < ds.n_trials() - n_hold ? train_idx : hold_idx).push_back(i);
    const Dataset train = subset(ds, train_idx);
    const Dataset hold = subset(ds, hold_idx);

    SpectrumReport report;
    for (std::size_t pi = 0; pi < profiles.size(); ++pi) {
        GeneratorConfig arch;
        arch.strides = profiles[pi];
        TrainConfig tc = cfg;
        tc.seed = derive_seed(cfg.seed, 0x51u, pi);
        const TrainResult trained = train_dae(train, tc, arch);

        std::vector<Trial> recon_trials;
        for (const Trial& t : hold.trials) {
            Trial r = t;
            r.samples = decode_with_skips(trained.model, encode(trained.model, t.samples));
            recon_trials.push_back(std::move(r));
        }
        std::vector<const Trial*> recon_ptrs, hold_ptrs;
        for (const Trial& t : recon_trials) recon_ptrs.push_back(&t);
        for (const Trial& t : hold.trials) hold_ptrs.push_back(&t);

        SpectrumProfileResult res;
        res.strides = profiles[pi];
        res.compression = profiles[pi][0] * profiles[pi][1] * profiles[pi][2];
        res.original = mean_psd(hold_ptrs, ds.sample_rate_hz);
        res.reconstruction = mean_psd(recon_ptrs, ds.sample_rate_hz);
        const double orig_high = band_power(res.original, 24.0, 32.0);
        const double orig_low = band_power(res.original, 8.0, 16.0);
        res.high_band_retention =
            orig_high > 0.0 ? band_power(res.reconstruction, 24.0, 32.0) / orig_high : 0.0;
        res.low_band_retention =
            orig_low > 0.0 ? band_power(res.reconstruction, 8.0, 16.0) / orig_low : 0.0;
        report.profiles.push_back(std::move(res));
    }

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream out(out_dir / "report.txt");
        if (!out) throw std::runtime_error("spectrum: cannot write report");
        out << "compression spectrum report\n";
        out << "hold-out trials: " << hold.n_trials() << " of " << ds.n_trials() << "\n\n";
        char buf[160];
        for (const auto& p : report.profiles) {
            std::snprintf(buf, sizeof(buf),
                          "strides (%d,%d,%d)  compression %2dx  "
                          "high-band retention (24-32 Hz): %.4f  "
                          "low-band retention (8-16 Hz): %.4f\n",
                          p.strides[0], p.strides[1], p.strides[2], p.compression,
                          p.high_band_retention, p.low_band_retention);
            out << buf;
        }
        for (const auto& p : report.profiles) {
            SvgSeries orig{"original", p.original.freqs, p.original.power};
            SvgSeries recon{"reconstruction", p.reconstruction.freqs, p.reconstruction.power};
            char name[64];
            std::snprintf(name, sizeof(name), "spectrum_%dx.svg", p.compression);
            write_svg_lines(out_dir / name,
                            "reconstruction spectrum, " + std::to_string(p.compression) +
                                "x compression",
                            {orig, recon}, "frequency (Hz)", "power density");
        }
    }
    return report;
}

}  // namespace fusiongen
