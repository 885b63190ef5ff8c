#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dfprune/cutoff.hpp"
#include "dfprune/dataset.hpp"
#include "dfprune/network.hpp"
#include "dfprune/pruner.hpp"
#include "dfprune/trainer.hpp"

namespace dfprune {

inline constexpr int kModelFormatVersion = 1;

// Locale-independent decimal with 17 significant digits; round-trips any
// finite double exactly.
std::string format_double(double value);
// Strict locale-independent parse of a whole token.
bool parse_double(std::string_view token, double& out);

void write_model(std::ostream& os, const Network& net);
Network read_model(std::istream& is, const std::string& source = "<stream>");
void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

inline constexpr const char* kTraceHeader = "step,kept,removed,saliency,test_error";

void write_trace(std::ostream& os, const PruneTrace& trace);
PruneTrace read_trace(std::istream& is, const std::string& source = "<stream>");
void export_trace(const PruneTrace& trace, const std::filesystem::path& path);
PruneTrace import_trace(const std::filesystem::path& path);

// `key = value` lines, one field per line; vectors are comma-separated.
void write_report(std::ostream& os, const CutoffReport& report);
void export_report(const CutoffReport& report, const std::filesystem::path& path);
// Short multi-line summary for terminals.
std::string summarize(const CutoffReport& report);

// step,error
void export_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

// One sample per row: d feature columns then an integer label. Every sample
// is tagged Train; call assign_splits/standardize afterwards.
Dataset read_dataset_csv(std::istream& is, bool skip_header = false,
                         const std::string& source = "<stream>");
Dataset load_dataset_csv(const std::filesystem::path& path, bool skip_header = false);

}  // namespace dfprune
