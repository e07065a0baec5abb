#include "fusiongen/dataset_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fusiongen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void validate_dataset(const Dataset& ds) {
    const int C = ds.n_channels();
    const int K = ds.n_classes();
    if (ds.sample_rate_hz <= 0.0) throw std::runtime_error("dataset: sample rate must be positive");
    int T = -1;
    for (std::size_t i = 0; i < ds.trials.size(); ++i) {
        const Trial& tr = ds.trials[i];
        if (tr.channels() != C)
            throw std::runtime_error("dataset: trial " + std::to_string(i) +
                                     " channel count differs from channel_names");
        if (tr.length() < 1)
            throw std::runtime_error("dataset: trial " + std::to_string(i) + " is empty");
        if (T < 0) T = tr.length();
        if (tr.length() != T)
            throw std::runtime_error("dataset: trial " + std::to_string(i) +
                                     " length differs from the rest");
        if (tr.label < 0 || tr.label >= K)
            throw std::runtime_error("dataset: trial " + std::to_string(i) +
                                     " label out of range");
        if (!tr.samples.allFinite())
            throw std::runtime_error("dataset: trial " + std::to_string(i) +
                                     " contains non-finite values");
        if (tr.sample_rate_hz != ds.sample_rate_hz)
            throw std::runtime_error("dataset: trial " + std::to_string(i) +
                                     " sample rate differs from dataset rate");
    }
}

double matrix_std(const Mat& m) {
    const double n = static_cast<double>(m.size());
    if (n == 0.0) return 0.0;
    const double mean = m.mean();
    return std::sqrt((m.array() - mean).square().sum() / n);
}

namespace {

void write_f32le(std::ofstream& out, double v) {
    const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const char bytes[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                           static_cast<char>((u >> 16) & 0xff),
                           static_cast<char>((u >> 24) & 0xff)};
    out.write(bytes, 4);
}

double read_f32le(const unsigned char* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    return static_cast<double>(std::bit_cast<float>(u));
}

Mat read_raw_trial(const fs::path& file, int C, int expected_T) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("dataset: missing trial file " + file.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() % (4u * static_cast<std::size_t>(C)) != 0)
        throw std::runtime_error("dataset: file size of " + file.string() +
                                 " is not C*T*4 bytes");
    const int T = static_cast<int>(bytes.size() / (4u * static_cast<std::size_t>(C)));
    if (expected_T > 0 && T != expected_T)
        throw std::runtime_error("dataset: file size of " + file.string() +
                                 " does not match trial length " + std::to_string(expected_T));
    if (T < 1) throw std::runtime_error("dataset: empty trial file " + file.string());
    Mat m(C, T);
    std::size_t off = 0;
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t, off += 4) m(c, t) = read_f32le(bytes.data() + off);
    if (!m.allFinite())
        throw std::runtime_error("dataset: non-finite value in " + file.string());
    return m;
}

Mat read_csv_trial(const fs::path& file, int C, int expected_T) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("dataset: missing trial file " + file.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != C)
        throw std::runtime_error("dataset: " + file.string() + " has " +
                                 std::to_string(rows.size()) + " rows, expected " +
                                 std::to_string(C));
    const int T = static_cast<int>(rows[0].size());
    for (const auto& r : rows)
        if (static_cast<int>(r.size()) != T)
            throw std::runtime_error("dataset: ragged rows in " + file.string());
    if (expected_T > 0 && T != expected_T)
        throw std::runtime_error("dataset: " + file.string() + " length differs from the rest");
    Mat m(C, T);
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) m(c, t) = rows[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
    if (!m.allFinite())
        throw std::runtime_error("dataset: non-finite value in " + file.string());
    return m;
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir) {
    validate_dataset(ds);
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = 1;
    manifest["sample_rate_hz"] = ds.sample_rate_hz;
    manifest["channel_names"] = ds.channel_names;
    manifest["class_names"] = ds.class_names;
    json trials = json::array();
    for (std::size_t i = 0; i < ds.trials.size(); ++i) {
        const Trial& tr = ds.trials[i];
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%05zu.f32", i);
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("dataset: cannot write " + (dir / name).string());
        for (int c = 0; c < tr.channels(); ++c)
            for (int t = 0; t < tr.length(); ++t) write_f32le(out, tr.samples(c, t));
        trials.push_back({{"file", name},
                          {"subject_id", tr.subject_id},
                          {"session_id", tr.session_id},
                          {"label", tr.label}});
    }
    manifest["trials"] = std::move(trials);
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("dataset: cannot write manifest in " + dir.string());
    out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("dataset: missing manifest " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const std::exception& e) {
        throw std::runtime_error("dataset: ill-formed manifest " + manifest_path.string() + ": " +
                                 e.what());
    }
    for (const char* key : {"format_version", "sample_rate_hz", "channel_names", "class_names",
                            "trials"})
        if (!manifest.contains(key))
            throw std::runtime_error(std::string("dataset: manifest missing field '") + key + "'");
    if (manifest["format_version"].get<int>() != 1)
        throw std::runtime_error("dataset: unsupported container format version");

    Dataset ds;
    ds.sample_rate_hz = manifest["sample_rate_hz"].get<double>();
    ds.channel_names = manifest["channel_names"].get<std::vector<std::string>>();
    ds.class_names = manifest["class_names"].get<std::vector<std::string>>();
    const int C = ds.n_channels();
    if (C < 1) throw std::runtime_error("dataset: manifest declares no channels");

    int T = -1;
    for (const auto& entry : manifest["trials"]) {
        for (const char* key : {"file", "subject_id", "session_id", "label"})
            if (!entry.contains(key))
                throw std::runtime_error(std::string("dataset: trial entry missing field '") +
                                         key + "'");
        Trial tr;
        tr.subject_id = entry["subject_id"].get<std::string>();
        tr.session_id = entry["session_id"].get<std::string>();
        tr.label = entry["label"].get<int>();
        tr.sample_rate_hz = ds.sample_rate_hz;
        const fs::path file = dir / entry["file"].get<std::string>();
        tr.samples = (file.extension() == ".csv") ? read_csv_trial(file, C, T)
                                                  : read_raw_trial(file, C, T);
        if (T < 0) T = tr.length();
        ds.trials.push_back(std::move(tr));
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace fusiongen
