#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qdent/core.hpp"
#include "qdent/dynamics.hpp"
#include "qdent/sweeps.hpp"
#include "qdent/tomography.hpp"

namespace qdent::io {

/// Shortest round-trip decimal representation (locale independent).
std::string format_double(double x);

/// Writes each line prefixed with "# ".
void write_header(std::ostream& os, const std::vector<std::string>& lines);

/// Columns: t, rho_gg, rho_xx, rho_bb, re_rho_gb, im_rho_gb, p_x, p_b
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const DecayRates& decay,
                          const std::vector<std::string>& header = {});

/// Columns: theta, omega0, energy, p_b, p_x, ratio, saturated, status
void write_sweep_csv(std::ostream& os, const SweepResult& sweep, const std::vector<std::string>& header = {});

/// Eight rows of four comma-separated values: real part, then imaginary part.
void write_density_matrix_csv(std::ostream& os, const ComplexMatrix& m, const std::vector<std::string>& header = {});
/// Reads the layout above; lines starting with '#' and blank lines are skipped.
ComplexMatrix read_density_matrix_csv(std::istream& is);

/// Whitespace table "id xx_projector x_projector counts" with an "# n_mean <value>" header line.
void write_dataset(std::ostream& os, const TomographyDataset& data, const std::vector<std::string>& header = {});
TomographyDataset read_dataset(std::istream& is);

}  // namespace qdent::io
