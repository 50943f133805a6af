#include "modrec/harness/csv.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace modrec {

namespace {

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write " + path);
    out.precision(12);
    return out;
}

}  // namespace

void emit_csv(const std::vector<RunResult>& runs, const std::vector<LatencyRow>& latency,
              const std::string& out_dir) {
    {
        std::ofstream out = open_out(out_dir, "ber_vs_snr.csv");
        out << "updater,snr_db,ber_mean,ber_std\n";
        for (const RunResult& run : runs)
            for (const SnrSummary& s : run.summaries)
                out << run.updater_label << "," << s.snr_db << "," << s.ber_mean << ","
                    << s.ber_std << "\n";
    }
    {
        std::ofstream out = open_out(out_dir, "ber_vs_time.csv");
        out << "updater,snr_db,block,ber\n";
        for (const RunResult& run : runs)
            for (const BlockRecord& b : run.blocks)
                if (b.data_bits > 0)
                    out << run.updater_label << "," << b.snr_db << "," << b.block << ","
                        << b.ber << "\n";
    }
    {
        std::ofstream out = open_out(out_dir, "ser_rotation.csv");
        out << "updater,block,ser\n";
        for (const RunResult& run : runs) {
            if (run.scenario != "rotation") continue;
            for (const BlockRecord& b : run.blocks)
                if (b.data_symbols > 0)
                    out << run.updater_label << "," << b.block << "," << b.ser << "\n";
        }
    }
    {
        std::ofstream out = open_out(out_dir, "latency.csv");
        out << "updater,repr,P,mean_us,p95_us\n";
        for (const LatencyRow& row : latency) {
            if (row.refused) continue;
            out << row.updater << "," << row.repr << "," << row.params << "," << row.mean_us
                << "," << row.p95_us << "\n";
        }
    }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace modrec
