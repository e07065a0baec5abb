#include "fusiongen/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fusiongen {

namespace {

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == ',' || c == ';' || c == '\n') c = '_';
    return out;
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void emit_results(const ResultTable& table, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir / "results.csv");
    if (!csv) throw std::runtime_error("emit_results: cannot write results.csv");
    csv << "dataset,subject,mode,trials,method,mean_acc,std_acc,seed_accs\n";
    for (const ResultRow& row : table.rows) {
        csv << sanitize(row.dataset) << ',' << sanitize(row.subject) << ','
            << sanitize(row.mode) << ',' << row.trials << ',' << sanitize(row.method) << ','
            << fmt6(row.mean_acc) << ',' << fmt6(row.std_acc) << ',';
        for (std::size_t i = 0; i < row.seed_accs.size(); ++i) {
            if (i) csv << ';';
            csv << fmt6(row.seed_accs[i]);
        }
        csv << '\n';
    }

    std::ofstream txt(out_dir / "results.txt");
    if (!txt) throw std::runtime_error("emit_results: cannot write results.txt");
    txt << format_results_text(table);
}

ResultTable parse_results_csv(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("parse_results_csv: cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line) ||
        line != "dataset,subject,mode,trials,method,mean_acc,std_acc,seed_accs")
        throw std::runtime_error("parse_results_csv: unexpected header");
    ResultTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        ResultRow row;
        std::getline(ss, row.dataset, ',');
        std::getline(ss, row.subject, ',');
        std::getline(ss, row.mode, ',');
        std::getline(ss, field, ',');
        row.trials = std::stoi(field);
        std::getline(ss, row.method, ',');
        std::getline(ss, field, ',');
        row.mean_acc = std::stod(field);
        std::getline(ss, field, ',');
        row.std_acc = std::stod(field);
        std::getline(ss, field);
        std::stringstream accs(field);
        std::string acc;
        while (std::getline(accs, acc, ';'))
            if (!acc.empty()) row.seed_accs.push_back(std::stod(acc));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_results_text(const ResultTable& table) {
    // One text row per (dataset, mode, trials); columns are methods; cells
    // average the per-subject mean accuracies, as percent with two decimals.
    struct Key {
        std::string dataset, mode;
        int trials;
        bool operator<(const Key& o) const {
            return std::tie(dataset, mode, trials) < std::tie(o.dataset, o.mode, o.trials);
        }
    };
    std::vector<std::string> methods;
    std::map<Key, std::map<std::string, std::pair<double, int>>> cells;
    std::vector<Key> key_order;
    for (const ResultRow& row : table.rows) {
        if (std::find(methods.begin(), methods.end(), row.method) == methods.end())
            methods.push_back(row.method);
        const Key key{row.dataset, row.mode, row.trials};
        if (!cells.count(key)) key_order.push_back(key);
        auto& cell = cells[key][row.method];
        cell.first += row.mean_acc;
        cell.second += 1;
    }
    std::sort(key_order.begin(), key_order.end());
    key_order.erase(std::unique(key_order.begin(), key_order.end(),
                                [](const Key& a, const Key& b) { return !(a < b) && !(b < a); }),
                    key_order.end());

    std::ostringstream out;
    out << "classification accuracy (%), averaged over subjects and repeats\n\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-16s %-7s %-7s", "dataset", "mode", "trials");
    out << buf;
    for (const std::string& m : methods) {
        std::snprintf(buf, sizeof(buf), " %12s", m.substr(0, 12).c_str());
        out << buf;
    }
    out << '\n';
    for (const Key& key : key_order) {
        std::snprintf(buf, sizeof(buf), "%-16s %-7s %-7d", key.dataset.substr(0, 16).c_str(),
                      key.mode.c_str(), key.trials);
        out << buf;
        for (const std::string& m : methods) {
            const auto it = cells[key].find(m);
            if (it == cells[key].end()) {
                std::snprintf(buf, sizeof(buf), " %12s", "-");
            } else {
                std::snprintf(buf, sizeof(buf), " %12.2f",
                              100.0 * it->second.first / it->second.second);
            }
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace fusiongen
