#include "fusiongen/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "fusiongen/bench.hpp"
#include "fusiongen/csp_lda.hpp"
#include "fusiongen/dataset_io.hpp"
#include "fusiongen/preprocess.hpp"
#include "fusiongen/report.hpp"
#include "fusiongen/synth.hpp"

namespace fusiongen::cli {

namespace {

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

std::array<int, 3> parse_triple(const std::string& csv) {
    std::array<int, 3> out{};
    std::stringstream ss(csv);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= 3) throw std::runtime_error("expected three comma-separated integers");
        out[static_cast<std::size_t>(i++)] = std::stoi(item);
    }
    if (i != 3) throw std::runtime_error("expected three comma-separated integers");
    return out;
}

std::vector<std::array<int, 3>> parse_profiles(const std::string& spec) {
    std::vector<std::array<int, 3>> out;
    std::stringstream ss(spec);
    std::string group;
    while (std::getline(ss, group, ';'))
        if (!group.empty()) out.push_back(parse_triple(group));
    return out;
}

struct CliState {
    // synth
    SynthConfig synth;
    std::string synth_freqs;
    // preprocess
    PreprocessConfig pre;
    // shared paths
    std::string in_path, out_path, model_path, sources_path, plans_dir, pair_map;
    // align
    std::string scope_name = "session";
    double epsilon_rel = 1e-10;
    // train / spectrum
    TrainConfig train;
    std::string depths_spec = "8,16,32";
    std::string strides_spec = "5,5,2";
    std::string profiles_spec = "5,1,1;5,2,1;5,5,2";
    // generate / augment
    int per_class = 20;
    double alpha = 0.2;
    std::string method = "noise";
    BaselineParams baseline;
    bool flip_sign = false;
    // bench
    ExperimentConfig bench;
    std::string bench_mode = "within";
    std::string bench_aug = "none";
    std::uint64_t seed = 0;
};

int cmd_synth(CliState& st) {
    st.synth.seed = st.seed;
    if (!st.synth_freqs.empty()) st.synth.class_freqs_hz = parse_double_list(st.synth_freqs);
    const Dataset ds = synthesize_dataset(st.synth);
    save_dataset(ds, st.out_path);
    std::printf("wrote %d trials to %s\n", ds.n_trials(), st.out_path.c_str());
    return 0;
}

int cmd_preprocess(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    const Dataset out = preprocess_dataset(ds, st.pre);
    save_dataset(out, st.out_path);
    std::printf("preprocessed %d trials -> %s\n", out.n_trials(), st.out_path.c_str());
    return 0;
}

int cmd_align(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    const auto [aligned, refs] = align_dataset(ds, parse_align_scope(st.scope_name),
                                               st.epsilon_rel);
    save_dataset(aligned, st.out_path);
    std::printf("aligned %d trials in %zu groups -> %s\n", aligned.n_trials(), refs.size(),
                st.out_path.c_str());
    return 0;
}

int cmd_train(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    GeneratorConfig arch;
    const auto depths = parse_triple(st.depths_spec);
    arch.depths = depths;
    arch.strides = parse_triple(st.strides_spec);
    st.train.seed = st.seed;
    const TrainResult result = train_dae(ds, st.train, arch);
    save_model(result.model, st.out_path);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
        std::printf("epoch %zu loss %.6f\n", e + 1, result.epoch_loss[e]);
    std::printf("model written to %s\n", st.out_path.c_str());
    return 0;
}

int cmd_generate(CliState& st) {
    const GeneratorModel model = load_model(st.model_path);
    const Dataset targets = load_dataset(st.in_path);
    const Dataset sources = st.sources_path.empty() ? targets : load_dataset(st.sources_path);
    std::vector<const Trial*> tgt_ptrs, src_ptrs;
    for (const Trial& t : targets.trials) tgt_ptrs.push_back(&t);
    for (const Trial& t : sources.trials) src_ptrs.push_back(&t);
    FusionConfig fc;
    fc.alpha = st.alpha;
    Dataset out = generate_augmented_set(model, tgt_ptrs, src_ptrs, st.per_class, fc, st.seed,
                                         targets);
    save_dataset(out, st.out_path);
    if (!st.plans_dir.empty()) {
        // Re-run the first pair of each class with a recorded plan.
        std::filesystem::create_directories(st.plans_dir);
        std::set<int> done;
        int idx = 0;
        for (const Trial& t : targets.trials) {
            if (done.count(t.label)) continue;
            done.insert(t.label);
            const Trial* src = nullptr;
            for (const Trial* s : src_ptrs)
                if (s->label == t.label && s != &t) { src = s; break; }
            if (!src) src = &t;
            FusionConfig cfg = fc;
            cfg.seed = derive_seed(st.seed, 0x61u, static_cast<std::uint64_t>(t.label));
            FusionPlan plan;
            generate_trial(model, t, *src, cfg, &plan);
            char name[48];
            std::snprintf(name, sizeof(name), "plan_class%d_%03d.json", t.label, idx++);
            write_plan(plan, std::filesystem::path(st.plans_dir) / name);
        }
    }
    std::printf("generated %d trials -> %s\n", out.n_trials(), st.out_path.c_str());
    return 0;
}

int cmd_augment(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    ChannelPairMap map;
    const bool needs_map = st.method == "cr";
    if (needs_map) {
        if (st.pair_map.empty()) throw std::runtime_error("augment: 'cr' needs --pair-map");
        map = load_pair_map(st.pair_map, ds);
    }
    st.baseline.flip_sign = st.flip_sign;
    std::map<int, std::vector<const Trial*>> by_class;
    for (const Trial& t : ds.trials) by_class[t.label].push_back(&t);
    Dataset out;
    out.channel_names = ds.channel_names;
    out.class_names = ds.class_names;
    out.sample_rate_hz = ds.sample_rate_hz;
    Rng rng(st.seed);
    for (const auto& [label, pool] : by_class) {
        (void)label;
        for (int i = 0; i < st.per_class; ++i)
            out.trials.push_back(
                apply_baseline(st.method, pool, st.baseline, needs_map ? &map : nullptr, rng));
    }
    save_dataset(out, st.out_path);
    std::printf("augmented %d trials -> %s\n", out.n_trials(), st.out_path.c_str());
    return 0;
}

int cmd_bench(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    st.bench.master_seed = st.seed;
    st.bench.augmentation = st.bench_aug;
    st.bench.scope = parse_align_scope(st.scope_name);
    st.bench.epsilon_rel = st.epsilon_rel;
    st.bench.alpha = st.alpha;
    st.bench.train = st.train;
    st.bench.pair_map_path = st.pair_map;
    st.bench.arch.depths = parse_triple(st.depths_spec);
    st.bench.arch.strides = parse_triple(st.strides_spec);
    if (st.bench.dataset_name == "dataset") {
        const auto stem = std::filesystem::path(st.in_path).filename().string();
        if (!stem.empty()) st.bench.dataset_name = stem;
    }
    st.bench.mode = st.bench_mode == "cross" ? BenchMode::Cross : BenchMode::Within;
    if (st.bench_mode != "cross" && st.bench_mode != "within")
        throw std::runtime_error("bench: --mode must be within or cross");
    const ResultTable table = st.bench.mode == BenchMode::Cross
                                  ? run_cross_subject(ds, st.bench)
                                  : run_within_subject(ds, st.bench);
    emit_results(table, st.out_path);
    std::printf("%s", format_results_text(table).c_str());
    std::printf("results written to %s\n", st.out_path.c_str());
    return 0;
}

int cmd_spectrum(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    st.train.seed = st.seed;
    const auto profiles = parse_profiles(st.profiles_spec);
    const SpectrumReport report =
        compression_spectrum_report(ds, profiles, st.train, st.out_path);
    for (const auto& p : report.profiles)
        std::printf("compression %2dx: high-band retention %.4f, low-band retention %.4f\n",
                    p.compression, p.high_band_retention, p.low_band_retention);
    std::printf("report written to %s\n", st.out_path.c_str());
    return 0;
}

int cmd_project(CliState& st) {
    const Dataset ds = load_dataset(st.in_path);
    const auto points = project_2d(ds);
    std::filesystem::create_directories(st.out_path);
    const auto csv_path = std::filesystem::path(st.out_path) / "points.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("project: cannot write " + csv_path.string());
    csv << "x,y,label,subject\n";
    std::vector<int> groups;
    char buf[96];
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,", points[i][0], points[i][1]);
        csv << buf << ds.trials[i].label << ',' << ds.trials[i].subject_id << '\n';
        groups.push_back(ds.trials[i].label);
    }
    write_svg_scatter(std::filesystem::path(st.out_path) / "projection.svg",
                      "trial covariance projection", points, groups);
    std::printf("projected %zu trials -> %s\n", points.size(), st.out_path.c_str());
    return 0;
}

void add_seed(CLI::App* cmd, CliState& st) {
    cmd->add_option("--seed", st.seed, "master random seed");
}

void add_out(CLI::App* cmd, CliState& st, const char* desc) {
    cmd->add_option("--out", st.out_path, desc)->envname("FUSIONGEN_OUT")->required();
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CliState st;
    CLI::App app{"few-shot EEG data generation and benchmarking"};
    app.require_subcommand(1);

    CLI::App* synth = app.add_subcommand("synth", "write a synthetic EEG dataset");
    synth->add_option("--subjects", st.synth.n_subjects);
    synth->add_option("--classes", st.synth.n_classes);
    synth->add_option("--trials-per-class", st.synth.trials_per_class);
    synth->add_option("--channels", st.synth.channels);
    synth->add_option("--samples", st.synth.samples);
    synth->add_option("--rate", st.synth.sample_rate_hz);
    synth->add_option("--freqs", st.synth_freqs, "per-class carrier Hz, comma separated");
    synth->add_option("--mixing", st.synth.mixing_strength);
    synth->add_option("--noise", st.synth.noise_floor);
    add_seed(synth, st);
    add_out(synth, st, "output dataset directory");

    CLI::App* pre = app.add_subcommand("preprocess", "resample, bandpass and crop a dataset");
    pre->add_option("--in", st.in_path)->required();
    pre->add_option("--low", st.pre.band_low_hz);
    pre->add_option("--high", st.pre.band_high_hz);
    pre->add_option("--rate", st.pre.target_rate_hz);
    pre->add_option("--crop", st.pre.crop_seconds);
    add_seed(pre, st);
    add_out(pre, st, "output dataset directory");

    CLI::App* align = app.add_subcommand("align", "whiten trials per alignment group");
    align->add_option("--in", st.in_path)->required();
    align->add_option("--scope", st.scope_name, "session|subject|global");
    align->add_option("--epsilon-rel", st.epsilon_rel);
    add_seed(align, st);
    add_out(align, st, "output dataset directory");

    CLI::App* train = app.add_subcommand("train", "train the denoising autoencoder");
    train->add_option("--in", st.in_path)->required();
    train->add_option("--lr", st.train.lr);
    train->add_option("--batch", st.train.batch_size);
    train->add_option("--epochs", st.train.epochs);
    train->add_option("--noise-coef", st.train.noise_coefficient);
    train->add_option("--depths", st.depths_spec, "encoder depths d1,d2,d3");
    train->add_option("--strides", st.strides_spec, "encoder strides r1,r2,r3");
    add_seed(train, st);
    add_out(train, st, "output model file");

    CLI::App* gen = app.add_subcommand("generate", "synthesize trials by feature fusion");
    gen->add_option("--model", st.model_path)->required();
    gen->add_option("--in", st.in_path, "fusion target dataset")->required();
    gen->add_option("--sources", st.sources_path, "fusion source dataset (default: --in)");
    gen->add_option("--per-class", st.per_class);
    gen->add_option("--alpha", st.alpha, "fraction of bottleneck positions replaced");
    gen->add_option("--plans-dir", st.plans_dir, "dump one fusion plan per class as JSON");
    add_seed(gen, st);
    add_out(gen, st, "output dataset directory");

    CLI::App* aug = app.add_subcommand("augment", "apply a baseline augmentation");
    aug->add_option("--in", st.in_path)->required();
    aug->add_option("--method", st.method, "noise|scale|flip|cutresize|fshift|cr|dwt");
    aug->add_option("--per-class", st.per_class);
    aug->add_option("--pair-map", st.pair_map, "channel pair map JSON (for cr)");
    aug->add_option("--sigma-rel", st.baseline.noise_sigma_rel);
    aug->add_option("--scale-lo", st.baseline.scale_lo);
    aug->add_option("--scale-hi", st.baseline.scale_hi);
    aug->add_option("--cut-lo", st.baseline.cut_lo);
    aug->add_option("--cut-hi", st.baseline.cut_hi);
    aug->add_option("--shift-lo", st.baseline.fshift_lo_hz);
    aug->add_option("--shift-hi", st.baseline.fshift_hi_hz);
    aug->add_flag("--flip-sign", st.flip_sign, "flip amplitudes instead of time");
    add_seed(aug, st);
    add_out(aug, st, "output dataset directory");

    CLI::App* bench = app.add_subcommand("bench", "few-shot benchmark protocol");
    bench->set_config("--config", "", "config file mirroring the experiment settings");
    bench->add_option("--in", st.in_path)->required();
    bench->add_option("--mode", st.bench_mode, "within|cross");
    bench->add_option("--trials", st.bench.n_train_per_class, "training trials per class");
    bench->add_option("--aug", st.bench_aug,
                      "none|<baseline>|fusiongen|<baseline>+fusiongen");
    bench->add_option("--generated", st.bench.n_generated_per_class);
    bench->add_option("--repeats", st.bench.repeats);
    bench->add_option("--alpha", st.alpha);
    bench->add_option("--filters", st.bench.n_filters);
    bench->add_option("--scope", st.scope_name, "session|subject|global");
    bench->add_option("--epsilon-rel", st.epsilon_rel);
    bench->add_option("--lr", st.train.lr);
    bench->add_option("--batch", st.train.batch_size);
    bench->add_option("--epochs", st.train.epochs);
    bench->add_option("--noise-coef", st.train.noise_coefficient);
    bench->add_option("--depths", st.depths_spec);
    bench->add_option("--strides", st.strides_spec);
    bench->add_option("--pair-map", st.pair_map);
    bench->add_option("--name", st.bench.dataset_name, "dataset name in result rows");
    bench->add_option("--jobs", st.bench.jobs, "parallel fold/repeat workers");
    add_seed(bench, st);
    add_out(bench, st, "output directory for results.csv/results.txt");

    CLI::App* spectrum = app.add_subcommand("spectrum",
                                            "reconstruction spectra per compression profile");
    spectrum->add_option("--in", st.in_path)->required();
    spectrum->add_option("--profiles", st.profiles_spec,
                         "stride triples, e.g. 5,1,1;5,2,1;5,5,2");
    spectrum->add_option("--lr", st.train.lr);
    spectrum->add_option("--batch", st.train.batch_size);
    spectrum->add_option("--epochs", st.train.epochs);
    spectrum->add_option("--noise-coef", st.train.noise_coefficient);
    add_seed(spectrum, st);
    add_out(spectrum, st, "output directory for report.txt and SVG plots");

    CLI::App* project = app.add_subcommand("project", "2D projection of trial covariances");
    project->add_option("--in", st.in_path)->required();
    add_seed(project, st);
    add_out(project, st, "output directory for points.csv and projection.svg");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(synth)) return cmd_synth(st);
        if (app.got_subcommand(pre)) return cmd_preprocess(st);
        if (app.got_subcommand(align)) return cmd_align(st);
        if (app.got_subcommand(train)) return cmd_train(st);
        if (app.got_subcommand(gen)) return cmd_generate(st);
        if (app.got_subcommand(aug)) return cmd_augment(st);
        if (app.got_subcommand(bench)) return cmd_bench(st);
        if (app.got_subcommand(spectrum)) return cmd_spectrum(st);
        if (app.got_subcommand(project)) return cmd_project(st);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args);
}

}  // namespace fusiongen::cli
