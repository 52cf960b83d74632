#pragma once

#include <fstream>
#include <ostream>
#include <span>
#include <string>

#include "hexmg/errors.hpp"
#include "hexmg/mesh.hpp"

namespace hexmg {

/// Legacy ASCII VTK unstructured grid: lattice points, each element split
/// into p^3 tri-linear sub-cells (cell type 12), displacement as point data.
inline void write_vtk(std::ostream& os, const BoxMesh& mesh, std::span<const double> u) {
  if (u.size() != (size_t)mesh.num_dofs())
    throw std::invalid_argument("displacement field size mismatch");
  int p = mesh.order;
  long cells = (long)mesh.num_elements() * p * p * p;

  os << "# vtk DataFile Version 3.0\n";
  os << "hexmg displacement field\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_nodes() << " double\n";
  os.precision(12);
  for (int n = 0; n < mesh.num_nodes(); ++n)
    os << mesh.coords[3 * (size_t)n] << " " << mesh.coords[3 * (size_t)n + 1] << " "
       << mesh.coords[3 * (size_t)n + 2] << "\n";

  os << "CELLS " << cells << " " << cells * 9 << "\n";
  for (int ez = 0; ez < mesh.counts[2]; ++ez)
    for (int ey = 0; ey < mesh.counts[1]; ++ey)
      for (int ex = 0; ex < mesh.counts[0]; ++ex)
        for (int k = 0; k < p; ++k)
          for (int j = 0; j < p; ++j)
            for (int i = 0; i < p; ++i) {
              int x0 = p * ex + i, y0 = p * ey + j, z0 = p * ez + k;
              os << 8 << " " << mesh.node_index(x0, y0, z0) << " "
                 << mesh.node_index(x0 + 1, y0, z0) << " "
                 << mesh.node_index(x0 + 1, y0 + 1, z0) << " "
                 << mesh.node_index(x0, y0 + 1, z0) << " "
                 << mesh.node_index(x0, y0, z0 + 1) << " "
                 << mesh.node_index(x0 + 1, y0, z0 + 1) << " "
                 << mesh.node_index(x0 + 1, y0 + 1, z0 + 1) << " "
                 << mesh.node_index(x0, y0 + 1, z0 + 1) << "\n";
            }
  os << "CELL_TYPES " << cells << "\n";
  for (long c = 0; c < cells; ++c) os << 12 << "\n";

  os << "POINT_DATA " << mesh.num_nodes() << "\n";
  os << "VECTORS displacement double\n";
  for (int n = 0; n < mesh.num_nodes(); ++n)
    os << u[3 * (size_t)n] << " " << u[3 * (size_t)n + 1] << " " << u[3 * (size_t)n + 2]
       << "\n";
}

inline void write_vtk_file(const std::string& path, const BoxMesh& mesh,
                           std::span<const double> u) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_vtk(os, mesh, u);
  if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace hexmg
