#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "opidyn/types.hpp"

namespace opidyn {

// Edge list, one "follower followee" pair per line, '#' starts a comment.
// Node count is max id + 1 unless overridden (isolated tail users need the
// override). write_network emits a "# users <n>" header that read_network
// honors, so round trips preserve isolated users.
Network read_network(const std::string& path,
                     std::optional<int> n_users = {});
void write_network(const Network& net, const std::string& path);

// JSON Lines, one {"t":..,"u":..,"m":..} object per line in ascending t.
// Doubles are written with 17 significant digits so parsing them back is
// bit-exact. Ties in t are perturbed forward by 1e-9 s on read, with a
// warning to stderr. horizon: explicit argument, else just past the last
// event.
EventLog read_event_log(const std::string& path,
                        std::optional<double> horizon = {});
void write_event_log(const EventLog& log, const std::string& path);

// Single JSON object:
//   {"omega":..,"nu":..,"alpha":[..],"mu":[..],"sigma":[..],
//    "A":[[u,v,value],..],"B":[[u,v,value],..]}
// with u the receiving user (row) and v the poster (column).
ModelParams read_params(const std::string& path);
void write_params(const ModelParams& p, const std::string& path);

// Tidy long-format CSV "t,series_id,value" sorted by (series_id, t);
// one file feeds any plotting tool without reshaping.
struct SeriesPoint {
  double t;
  std::string series;
  double value;
};
void write_plot_data(std::vector<SeriesPoint> points, const std::string& path);

// Trailing-window average of event marks sampled at each event time,
// one point per event: mean of marks in (t - window, t].
std::vector<SeriesPoint> running_average(const EventLog& log, double window,
                                         const std::string& series);

// "90", "90s", "15m", "6h" -> seconds. Throws on anything else.
double parse_duration(const std::string& text);

}  // namespace opidyn
