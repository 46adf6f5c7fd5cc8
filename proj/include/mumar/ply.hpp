#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "mumar/geometry.hpp"
#include "mumar/mesh.hpp"

namespace mumar {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Reads the vertex element: x, y, z (float or double) are required; nx, ny,
/// nz and an integer face_label are picked up when present. Throws kIo when
/// the file cannot be opened and kParse (naming the file) on malformed content.
PointCloud read_ply(const std::filesystem::path& path);

/// Reads vertices and the face element (polygons fan-triangulated). Face ids
/// come from a per-face face_label property, else the face index.
TriangleMesh read_ply_mesh(const std::filesystem::path& path);

/// Writes x, y, z as double, plus normals and face_label when the cloud has
/// them, plus an optional per-vertex double property named scalar_name.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::kBinaryLittleEndian, std::span<const double> scalar = {},
               const std::string& scalar_name = "distance");

void write_ply_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                    PlyFormat format = PlyFormat::kAscii);

}  // namespace mumar
