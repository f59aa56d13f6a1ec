//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file geometry.hpp  Cuboid chairs, signed distances, 2-D signed grids.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sitfit/common.hpp"

namespace sitfit::geom
{

//! Oriented box: unit-quaternion rotation applied about the center.
struct Cuboid
{
    Vec3 center{Vec3::Zero()};
    Vec3 half_extents{Vec3::Ones()};  //!< all components > 0
    Quat rotation{1, 0, 0, 0};        //!< unit quaternion (w, x, y, z)
};

//! Axis-aligned bounds of a chair, named per axis.
struct Bbox
{
    double x_min{0}, x_max{0};
    double y_min{0}, y_max{0};
    double z_min{0}, z_max{0};
};

//! A chair is a non-empty union of cuboids; the bbox exactly encloses them.
struct ChairAsm
{
    std::vector<Cuboid> cuboids;
    Bbox bbox;
};

//! Validate invariants and compute the exact enclosing bbox.
ChairAsm make_chair(std::vector<Cuboid> cuboids);

//! Exact signed distance from p to one oriented cuboid (negative inside).
double sdf_cuboid(Vec3 const& p, Cuboid const& c);

//! Signed distance to the chair: min over cuboids. 1-Lipschitz.
double sdf_chair(Vec3 const& p, ChairAsm const& chair);

//! Distance plus a subgradient. Ties and interior faces resolve to the first
//! minimizing cuboid in list order; |grad| == 1 wherever the field is smooth.
double sdf_chair_grad(Vec3 const& p, ChairAsm const& chair, Vec3* grad);

//! Batch kernel: out[i] = sdf_chair(points[i]).  OpenMP-parallel.
void sdf_batch(std::vector<Vec3> const& points,
               ChairAsm const& chair,
               std::vector<double>* out,
               int jobs);
//! Serial reference for the batch kernel (kept for equality tests).
void sdf_batch_serial(std::vector<Vec3> const& points,
                      ChairAsm const& chair,
                      std::vector<double>* out);

//! Area-weighted uniform samples over all cuboid faces. Per-face counts use
//! largest-remainder allocation (within one sample of exact proportion);
//! in-face placement is uniform from the seeded generator. Deterministic.
std::vector<Vec3>
sample_surface(ChairAsm const& chair, std::size_t n, std::uint64_t seed);

//! Dense 2-D grid of signed distances in grid (cell) units.
//! Values are <= 0 inside the valid region and > 0 outside it.
struct SignedGrid2D
{
    int width{0};   //!< cells along x (first query coordinate)
    int height{0};  //!< cells along y (second query coordinate)
    double x_lo{0}, x_hi{0};
    double y_lo{0}, y_hi{0};
    std::vector<double> values;  //!< row-major, values[y * width + x]

    double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
};

//! Exact signed Euclidean distance transform of a validity mask:
//! -dist(cell, nearest invalid cell) on valid cells,
//! +dist(cell, nearest valid cell) on invalid cells, in cell units.
//! A single-class grid gets the finite sentinel +/-(width + height).
SignedGrid2D distance_transform(std::vector<std::uint8_t> const& valid,
                                int width,
                                int height,
                                double x_lo,
                                double x_hi,
                                double y_lo,
                                double y_hi);

//! Bilinear interpolation between cell centers, clamped to the grid edge
//! (queries outside the domain behave as if projected onto it).
double bilerp(SignedGrid2D const& g, double x, double y);

//! Interpolated value plus its gradient w.r.t. (x, y). The gradient is the
//! piecewise-bilinear one; at clamped queries it is zero along the clamped
//! axis.
double bilerp_grad(SignedGrid2D const& g, double x, double y, double* dx, double* dy);

//! Distance from a point to the segment [a, b].
double point_segment_distance(Vec3 const& p, Vec3 const& a, Vec3 const& b);

//! Minimum distance between segments [a0, a1] and [b0, b1]; optionally
//! reports the minimizing parameters s, t in [0, 1] along each segment.
double segment_distance(Vec3 const& a0,
                        Vec3 const& a1,
                        Vec3 const& b0,
                        Vec3 const& b1,
                        double* s = nullptr,
                        double* t = nullptr);

//! Chair JSON: {"cuboids": [{"center", "half_extents", "rotation"[w,x,y,z]}]}
std::string chair_to_json(ChairAsm const& chair);
ChairAsm chair_from_json(std::string const& text);

//! Triangulated cuboids (12 triangles each) for OBJ export.
void chair_mesh(ChairAsm const& chair,
                std::vector<Vec3>* vertices,
                std::vector<std::array<int, 3>>* triangles);

}  // namespace sitfit::geom
