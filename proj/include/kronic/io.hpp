#ifndef KRONIC_IO_HPP
#define KRONIC_IO_HPP

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "kronic/control.hpp"
#include "kronic/systems.hpp"

namespace kronic::io {

/// Shortest decimal that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

struct CsvTable
{
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  /// Index of a column by name; throws InvalidArgument when absent.
  [[nodiscard]] Eigen::Index column(const std::string & name) const;
  [[nodiscard]] bool has_column(const std::string & name) const;
};

void write_csv(const std::filesystem::path & path, const CsvTable & table);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path & path);

/// Header t,x1..xn[,dx1..dxn][,u1..uq].
[[nodiscard]] CsvTable trajectory_table(const TrajectoryDataset & data);
[[nodiscard]] TrajectoryDataset trajectory_from_table(const CsvTable & table);

void write_trajectory_csv(const std::filesystem::path & path, const TrajectoryDataset & data);
[[nodiscard]] TrajectoryDataset read_trajectory_csv(const std::filesystem::path & path);

/// Header t,x1..xn,u1..uq,C1..Cd,cost.
[[nodiscard]] CsvTable closed_loop_table(const ClosedLoopResult & r);
void write_closed_loop_csv(const std::filesystem::path & path, const ClosedLoopResult & r);

void write_json(const std::filesystem::path & path, const nlohmann::json & j);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path & path);

/// 64-bit FNV-1a of a string, as 16 hex digits.
[[nodiscard]] std::string fnv1a_hex(const std::string & s);

}  // namespace kronic::io

#endif  // KRONIC_IO_HPP
