#pragma once

// Text formats: intensity CSV, event records, figure CSVs and JSON summaries.
// Every double is written with 17 significant digits so files round-trip exactly.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "vipa/analysis.hpp"
#include "vipa/design.hpp"
#include "vipa/herald.hpp"

namespace vipa::io {

std::string format_double(double v);
double parse_double(const std::string& text, long line = 0);

/// `x_um,intensity` when the grid is a single y = 0 slice, else `x_um,y_um,intensity`.
void write_grid_csv(std::ostream& os, const IntensityGrid<double>& grid);
IntensityGrid<double> read_grid_csv(std::istream& is);

/// `pulse_index,element,time_tag_ns` per line, origin stripped.
void write_events(std::ostream& os, const EventList& events);
/// Ground-truth sidecar: `pulse_index,element,time_tag_ns,origin` with origin photon|dark.
void write_events_truth(std::ostream& os, const EventList& events);
/// Parses the plain event format; origin is reported as photon. Blank lines are skipped.
EventList read_events(std::istream& is);

void write_fig6_csv(std::ostream& os, const std::vector<TimeHistogram>& histograms);
void write_fig7_csv(std::ostream& os, const SpatialProfile& profile, const LorentzianFit& fit);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::vector<HeraldScenario>& scenarios);

nlohmann::json to_json(const DesignResult& result);
nlohmann::json to_json(const LorentzianFit& fit);
nlohmann::json to_json(const std::vector<ShiftEstimate>& shifts);

/// Writes `json` with a trailing newline; doubles keep full precision.
void write_json(std::ostream& os, const nlohmann::json& json);

}  // namespace vipa::io
