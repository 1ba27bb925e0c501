#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kdvlab/averaging.hpp"
#include "kdvlab/birkhoff.hpp"
#include "kdvlab/grid.hpp"
#include "kdvlab/hill.hpp"
#include "kdvlab/kdvflow.hpp"
#include "kdvlab/stochastic.hpp"

namespace kdvlab {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double ("nan", "inf", "-inf" otherwise).
std::string format_double(double x);
/// Inverse of format_double; throws InvalidArgument on garbage.
double parse_double(std::string_view s);

/// {"K": K, "N": N, "modes": [[k, u_k, u_-k], ...]}.
Json field_to_json(const FourierField& u);
FourierField field_from_json(const Json& j);

/// {lambda, mu, gaps, z, n_max, tolerances}.
Json spectrum_to_json(const HillSpectrum& s);
HillSpectrum spectrum_from_json(const Json& j);

/// {I, tail, n_max}.
Json actions_to_json(const ActionSpectrum& I);
ActionSpectrum actions_from_json(const Json& j);

/// A CSV table. Numeric cells are printed with format_double; an optional first
/// line "# config: <compact json>" makes the file self-describing.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(const std::vector<double>& row);
  void add_cells(std::vector<std::string> row);
  double value(std::size_t row, std::size_t col) const { return parse_double(rows.at(row).at(col)); }
  std::string to_string(const Json* config = nullptr) const;
};

/// Parses a table produced by CsvTable::to_string (comment lines are skipped).
CsvTable parse_csv(std::string_view text);

CsvTable spectrum_table(const HillSpectrum& s);                   ///< n, lambda_lo, lambda_hi, gap, mu
CsvTable actions_table(const ActionSpectrum& I);                  ///< n, I_n, gap_n
CsvTable trajectory_table(const TrajectoryRecord& r);              ///< t, tau, norm0, norm<p>.., H, extras.., angle_<n>..
CsvTable ensemble_table(const EnsembleResult& r);                  ///< tau, realization, I_.., proxy_I_.., angle_..
CsvTable averaged_table(const AveragedCurve& c);                   ///< tau, J_1..J_n, err_1..err_n
CsvTable averaged_comparison_table(const AveragedCurve& c);        ///< tau, I_1..I_n, deviation

/// One row per sample: tau, in_resonance, min_k (components joined by ':'), min_value.
struct ResonanceRow {
  double tau = 0.0;
  ResonanceHit hit;
};
CsvTable resonance_table(const std::vector<ResonanceRow>& rows);

/// JSON summary of an ensemble: seeds, completion, quantiles per action.
Json ensemble_summary(const EnsembleResult& r);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace kdvlab
