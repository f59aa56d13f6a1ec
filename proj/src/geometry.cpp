//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file geometry.cpp  Cuboid chairs, signed distances, 2-D signed grids.
//---------------------------------------------------------------------------//
#include "sitfit/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "sitfit/parallel.hpp"
#include "sitfit/rng.hpp"

namespace sitfit::geom
{

namespace
{

//! Local-frame coordinates of p relative to the cuboid center.
Vec3 to_local(Vec3 const& p, Cuboid const& c)
{
    return c.rotation.conjugate() * (p - c.center);
}

}  // namespace

ChairAsm make_chair(std::vector<Cuboid> cuboids)
{
    SITFIT_REQUIRE(!cuboids.empty(), "chair needs at least one cuboid");
    ChairAsm chair;
    double constexpr inf = std::numeric_limits<double>::infinity();
    chair.bbox = {inf, -inf, inf, -inf, inf, -inf};
    for (auto& c : cuboids)
    {
        SITFIT_REQUIRE(c.half_extents.minCoeff() > 0.0,
                       "cuboid half extents must be positive");
        double const norm = c.rotation.norm();
        SITFIT_REQUIRE(std::abs(norm - 1.0) < 1e-6,
                       "cuboid rotation must be a unit quaternion");
        c.rotation.normalize();
        for (int corner = 0; corner < 8; ++corner)
        {
            Vec3 const local{(corner & 1 ? 1.0 : -1.0) * c.half_extents.x(),
                             (corner & 2 ? 1.0 : -1.0) * c.half_extents.y(),
                             (corner & 4 ? 1.0 : -1.0) * c.half_extents.z()};
            Vec3 const w = c.rotation * local + c.center;
            chair.bbox.x_min = std::min(chair.bbox.x_min, w.x());
            chair.bbox.x_max = std::max(chair.bbox.x_max, w.x());
            chair.bbox.y_min = std::min(chair.bbox.y_min, w.y());
            chair.bbox.y_max = std::max(chair.bbox.y_max, w.y());
            chair.bbox.z_min = std::min(chair.bbox.z_min, w.z());
            chair.bbox.z_max = std::max(chair.bbox.z_max, w.z());
        }
    }
    chair.cuboids = std::move(cuboids);
    return chair;
}

double sdf_cuboid(Vec3 const& p, Cuboid const& c)
{
    Vec3 const q = to_local(p, c);
    Vec3 const d = q.cwiseAbs() - c.half_extents;
    double const outside = d.cwiseMax(0.0).norm();
    double const inside = std::min(d.maxCoeff(), 0.0);
    return outside + inside;
}

double sdf_chair(Vec3 const& p, ChairAsm const& chair)
{
    double best = std::numeric_limits<double>::infinity();
    for (auto const& c : chair.cuboids)
    {
        double const d = sdf_cuboid(p, c);
        if (std::isnan(d))
        {
            // A NaN distance (degenerate query point) must poison the result,
            // not lose the min race and report "infinitely far away".
            return std::numeric_limits<double>::quiet_NaN();
        }
        best = std::min(best, d);
    }
    return best;
}

double sdf_chair_grad(Vec3 const& p, ChairAsm const& chair, Vec3* grad)
{
    SITFIT_REQUIRE(!chair.cuboids.empty(), "chair must have at least one cuboid");
    double best = std::numeric_limits<double>::infinity();
    Cuboid const* active = nullptr;
    for (auto const& c : chair.cuboids)
    {
        double const d = sdf_cuboid(p, c);
        if (std::isnan(d))
        {
            if (grad != nullptr)
            {
                *grad = Vec3::Zero();
            }
            return std::numeric_limits<double>::quiet_NaN();
        }
        if (d < best)
        {
            best = d;
            active = &c;
        }
    }
    if (grad != nullptr)
    {
        Vec3 const q = to_local(p, *active);
        Vec3 const d = q.cwiseAbs() - active->half_extents;
        Vec3 g_local = Vec3::Zero();
        if (d.maxCoeff() > 0.0)
        {
            Vec3 const outward = d.cwiseMax(0.0);
            Vec3 const unit = outward / outward.norm();
            for (int a = 0; a < 3; ++a)
            {
                g_local[a] = (q[a] < 0.0 ? -1.0 : 1.0) * unit[a];
            }
        }
        else
        {
            // Interior: the distance varies only along the nearest face's
            // axis; ties pick the first axis so the subgradient stays a
            // deterministic function of the point.
            int axis = 0;
            d.maxCoeff(&axis);
            g_local[axis] = (q[axis] < 0.0 ? -1.0 : 1.0);
        }
        *grad = active->rotation * g_local;
    }
    return best;
}

void sdf_batch_serial(std::vector<Vec3> const& points,
                      ChairAsm const& chair,
                      std::vector<double>* out)
{
    out->resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        (*out)[i] = sdf_chair(points[i], chair);
    }
}

void sdf_batch(std::vector<Vec3> const& points,
               ChairAsm const& chair,
               std::vector<double>* out,
               int jobs)
{
    out->resize(points.size());
    parallel_for(
        points.size(),
        [&](std::size_t i) { (*out)[i] = sdf_chair(points[i], chair); },
        jobs);
}

std::vector<Vec3>
sample_surface(ChairAsm const& chair, std::size_t n, std::uint64_t seed)
{
    // One entry per cuboid face, ordered cuboid-major then +x,-x,+y,-y,+z,-z.
    struct Face
    {
        std::size_t cuboid;
        int axis;     //!< local axis the face is perpendicular to
        double sign;  //!< +1 or -1 along that axis
        double area;
    };
    std::vector<Face> faces;
    faces.reserve(chair.cuboids.size() * 6);
    double total_area = 0.0;
    for (std::size_t i = 0; i < chair.cuboids.size(); ++i)
    {
        Vec3 const& h = chair.cuboids[i].half_extents;
        for (int axis = 0; axis < 3; ++axis)
        {
            double const area = 4.0 * h[(axis + 1) % 3] * h[(axis + 2) % 3];
            for (double sign : {1.0, -1.0})
            {
                faces.push_back({i, axis, sign, area});
                total_area += area;
            }
        }
    }

    // Largest-remainder allocation: every face gets within one sample of its
    // exact proportional share, so face histograms are reproducible and tight.
    std::vector<std::size_t> count(faces.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainder(faces.size());
    std::size_t assigned = 0;
    for (std::size_t f = 0; f < faces.size(); ++f)
    {
        double const share = double(n) * faces[f].area / total_area;
        count[f] = std::size_t(std::floor(share));
        assigned += count[f];
        remainder[f] = {share - std::floor(share), f};
    }
    std::stable_sort(remainder.begin(),
                     remainder.end(),
                     [](auto const& a, auto const& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned)
    {
        ++count[remainder[k % remainder.size()].second];
    }

    std::vector<Vec3> points;
    points.reserve(n);
    Rng root(seed);
    for (std::size_t f = 0; f < faces.size(); ++f)
    {
        Rng rng = root.fork(f);
        Face const& face = faces[f];
        Cuboid const& c = chair.cuboids[face.cuboid];
        int const u_axis = (face.axis + 1) % 3;
        int const v_axis = (face.axis + 2) % 3;
        for (std::size_t k = 0; k < count[f]; ++k)
        {
            Vec3 local;
            local[face.axis] = face.sign * c.half_extents[face.axis];
            local[u_axis] =
                rng.uniform(-c.half_extents[u_axis], c.half_extents[u_axis]);
            local[v_axis] =
                rng.uniform(-c.half_extents[v_axis], c.half_extents[v_axis]);
            points.push_back(c.rotation * local + c.center);
        }
    }
    return points;
}

namespace
{

//! One-dimensional squared Euclidean distance transform: lower envelope of
//! parabolas rooted at the finite entries of f. Exact for sampled quadratics.
void edt_1d(std::vector<double> const& f, std::vector<double>* out)
{
    int const n = int(f.size());
    double constexpr inf = std::numeric_limits<double>::infinity();
    // Infinite entries carry no parabola; dropping them up front keeps the
    // envelope arithmetic free of inf - inf.
    std::vector<int> roots;
    roots.reserve(n);
    for (int q = 0; q < n; ++q)
    {
        if (f[q] < inf)
        {
            roots.push_back(q);
        }
    }
    if (roots.empty())
    {
        out->assign(n, inf);
        return;
    }
    std::vector<int> v(roots.size(), 0);
    std::vector<double> z(roots.size() + 1, 0.0);
    int k = 0;
    v[0] = roots[0];
    z[0] = -inf;
    z[1] = inf;
    for (std::size_t r = 1; r < roots.size(); ++r)
    {
        int const q = roots[r];
        double s = 0.0;
        while (true)
        {
            int const p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p))
                / (2.0 * q - 2.0 * p);
            if (s <= z[k])
            {
                --k;
            }
            else
            {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    out->assign(n, 0.0);
    k = 0;
    for (int q = 0; q < n; ++q)
    {
        while (z[k + 1] < double(q))
        {
            ++k;
        }
        double const dq = double(q) - v[k];
        (*out)[q] = dq * dq + f[v[k]];
    }
}

//! Squared distance from every cell to the nearest seed cell.
std::vector<double>
edt_2d(std::vector<std::uint8_t> const& seed_mask, int width, int height)
{
    double constexpr inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(std::size_t(width) * height);
    for (std::size_t i = 0; i < dist.size(); ++i)
    {
        dist[i] = seed_mask[i] ? 0.0 : inf;
    }
    std::vector<double> column(height), col_out(height);
    for (int x = 0; x < width; ++x)
    {
        for (int y = 0; y < height; ++y)
        {
            column[y] = dist[std::size_t(y) * width + x];
        }
        edt_1d(column, &col_out);
        for (int y = 0; y < height; ++y)
        {
            dist[std::size_t(y) * width + x] = col_out[y];
        }
    }
    std::vector<double> row(width), row_out(width);
    for (int y = 0; y < height; ++y)
    {
        for (int x = 0; x < width; ++x)
        {
            row[x] = dist[std::size_t(y) * width + x];
        }
        edt_1d(row, &row_out);
        for (int x = 0; x < width; ++x)
        {
            dist[std::size_t(y) * width + x] = row_out[x];
        }
    }
    return dist;
}

}  // namespace

SignedGrid2D distance_transform(std::vector<std::uint8_t> const& valid,
                                int width,
                                int height,
                                double x_lo,
                                double x_hi,
                                double y_lo,
                                double y_hi)
{
    SITFIT_REQUIRE(width > 0 && height > 0, "grid must be non-empty");
    SITFIT_REQUIRE(valid.size() == std::size_t(width) * height,
                   "mask size must match grid dimensions");
    SITFIT_REQUIRE(x_hi > x_lo && y_hi > y_lo, "grid domain must be non-empty");

    SignedGrid2D g;
    g.width = width;
    g.height = height;
    g.x_lo = x_lo;
    g.x_hi = x_hi;
    g.y_lo = y_lo;
    g.y_hi = y_hi;
    g.values.resize(valid.size());

    bool const any_valid =
        std::any_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; });
    bool const any_invalid =
        std::any_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v == 0; });
    double const sentinel = double(width + height);
    if (!any_valid || !any_invalid)
    {
        std::fill(g.values.begin(), g.values.end(), any_valid ? -sentinel : sentinel);
        return g;
    }

    std::vector<std::uint8_t> inverted(valid.size());
    for (std::size_t i = 0; i < valid.size(); ++i)
    {
        inverted[i] = valid[i] ? 0 : 1;
    }
    // to_invalid: squared distance to the nearest invalid cell (seeds are the
    // invalid cells); to_valid is the complementary transform.
    std::vector<double> const to_invalid = edt_2d(inverted, width, height);
    std::vector<double> const to_valid = edt_2d(valid, width, height);
    for (std::size_t i = 0; i < valid.size(); ++i)
    {
        g.values[i] = valid[i] ? -std::sqrt(to_invalid[i]) : std::sqrt(to_valid[i]);
    }
    return g;
}

namespace
{

//! Shared setup for bilerp: clamped cell coordinates and weights per axis.
struct BilerpAxis
{
    int i0;
    double frac;
    bool clamped;
};

BilerpAxis bilerp_axis(double q, double lo, double hi, int cells)
{
    double const delta = (hi - lo) / cells;
    double const u_raw = (q - lo) / delta - 0.5;
    BilerpAxis axis;
    if (std::isnan(u_raw)) {
        // A NaN query must surface as a NaN value, not an out-of-range index
        // (int(NaN) is undefined). Pin the cell and poison the weight.
        axis.i0 = 0;
        axis.frac = u_raw;
        axis.clamped = true;
        return axis;
    }
    axis.clamped = u_raw <= 0.0 || u_raw >= double(cells - 1);
    double const u = std::clamp(u_raw, 0.0, double(cells - 1));
    axis.i0 = std::min(int(std::floor(u)), std::max(cells - 2, 0));
    axis.frac = (cells > 1) ? u - axis.i0 : 0.0;
    return axis;
}

}  // namespace

double bilerp(SignedGrid2D const& g, double x, double y)
{
    return bilerp_grad(g, x, y, nullptr, nullptr);
}

double bilerp_grad(SignedGrid2D const& g, double x, double y, double* dx, double* dy)
{
    SITFIT_REQUIRE(g.width > 0 && g.height > 0, "grid must be non-empty");
    BilerpAxis const ax = bilerp_axis(x, g.x_lo, g.x_hi, g.width);
    BilerpAxis const ay = bilerp_axis(y, g.y_lo, g.y_hi, g.height);
    int const x1 = std::min(ax.i0 + 1, g.width - 1);
    int const y1 = std::min(ay.i0 + 1, g.height - 1);
    double const v00 = g.at(ax.i0, ay.i0);
    double const v10 = g.at(x1, ay.i0);
    double const v01 = g.at(ax.i0, y1);
    double const v11 = g.at(x1, y1);
    double const vx0 = v00 + ax.frac * (v10 - v00);
    double const vx1 = v01 + ax.frac * (v11 - v01);
    if (dx != nullptr)
    {
        double const dcell = (1.0 - ay.frac) * (v10 - v00) + ay.frac * (v11 - v01);
        *dx = ax.clamped ? 0.0 : dcell * g.width / (g.x_hi - g.x_lo);
    }
    if (dy != nullptr)
    {
        double const dcell = vx1 - vx0;
        *dy = ay.clamped ? 0.0 : dcell * g.height / (g.y_hi - g.y_lo);
    }
    return vx0 + ay.frac * (vx1 - vx0);
}

double point_segment_distance(Vec3 const& p, Vec3 const& a, Vec3 const& b)
{
    Vec3 const ab = b - a;
    double const len2 = ab.squaredNorm();
    double const t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

double segment_distance(Vec3 const& a0,
                        Vec3 const& a1,
                        Vec3 const& b0,
                        Vec3 const& b1,
                        double* s_out,
                        double* t_out)
{
    // Clamped closest-point computation on the bilinear distance-squared
    // surface over (s, t) in the unit square.
    Vec3 const da = a1 - a0;
    Vec3 const db = b1 - b0;
    Vec3 const r = a0 - b0;
    double const a = da.squaredNorm();
    double const e = db.squaredNorm();
    double const f = db.dot(r);
    double s = 0.0, t = 0.0;
    if (a <= 1e-30 && e <= 1e-30)
    {
        // Two points.
    }
    else if (a <= 1e-30)
    {
        t = std::clamp(f / e, 0.0, 1.0);
    }
    else
    {
        double const c = da.dot(r);
        if (e <= 1e-30)
        {
            s = std::clamp(-c / a, 0.0, 1.0);
        }
        else
        {
            double const b = da.dot(db);
            double const denom = a * e - b * b;
            s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            // Re-clamp t, then recompute the optimal s for the clamped t.
            if (t < 0.0)
            {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            }
            else if (t > 1.0)
            {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    if (s_out != nullptr)
    {
        *s_out = s;
    }
    if (t_out != nullptr)
    {
        *t_out = t;
    }
    return ((a0 + s * da) - (b0 + t * db)).norm();
}

std::string chair_to_json(ChairAsm const& chair)
{
    nlohmann::json doc;
    doc["cuboids"] = nlohmann::json::array();
    for (auto const& c : chair.cuboids)
    {
        nlohmann::json jc;
        jc["center"] = {c.center.x(), c.center.y(), c.center.z()};
        jc["half_extents"] = {c.half_extents.x(), c.half_extents.y(), c.half_extents.z()};
        jc["rotation"] = {c.rotation.w(), c.rotation.x(), c.rotation.y(), c.rotation.z()};
        doc["cuboids"].push_back(jc);
    }
    return doc.dump(2) + "\n";
}

ChairAsm chair_from_json(std::string const& text)
{
    nlohmann::json const doc = nlohmann::json::parse(text);
    SITFIT_REQUIRE(doc.contains("cuboids") && doc["cuboids"].is_array(),
                   "chair JSON needs a 'cuboids' array");
    std::vector<Cuboid> cuboids;
    for (auto const& jc : doc["cuboids"])
    {
        auto vec3 = [&](char const* key) {
            auto const& a = jc.at(key);
            SITFIT_REQUIRE(a.is_array() && a.size() == 3,
                           "cuboid vectors must have three components");
            return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
        };
        Cuboid c;
        c.center = vec3("center");
        c.half_extents = vec3("half_extents");
        auto const& q = jc.at("rotation");
        SITFIT_REQUIRE(q.is_array() && q.size() == 4,
                       "cuboid rotation must have four components (w, x, y, z)");
        c.rotation = Quat{q[0].get<double>(),
                          q[1].get<double>(),
                          q[2].get<double>(),
                          q[3].get<double>()};
        cuboids.push_back(c);
    }
    return make_chair(std::move(cuboids));
}

void chair_mesh(ChairAsm const& chair,
                std::vector<Vec3>* vertices,
                std::vector<std::array<int, 3>>* triangles)
{
    vertices->clear();
    triangles->clear();
    // Corner k has local sign pattern (k&1, k&2, k&4) -> (x, y, z).
    static int const quads[6][4] = {
        {1, 3, 7, 5},  // +x
        {0, 4, 6, 2},  // -x
        {2, 6, 7, 3},  // +y
        {0, 1, 5, 4},  // -y
        {4, 5, 7, 6},  // +z
        {0, 2, 3, 1},  // -z
    };
    for (auto const& c : chair.cuboids)
    {
        int const base = int(vertices->size());
        for (int corner = 0; corner < 8; ++corner)
        {
            Vec3 const local{(corner & 1 ? 1.0 : -1.0) * c.half_extents.x(),
                             (corner & 2 ? 1.0 : -1.0) * c.half_extents.y(),
                             (corner & 4 ? 1.0 : -1.0) * c.half_extents.z()};
            vertices->push_back(c.rotation * local + c.center);
        }
        for (auto const& quad : quads)
        {
            triangles->push_back({base + quad[0], base + quad[1], base + quad[2]});
            triangles->push_back({base + quad[0], base + quad[2], base + quad[3]});
        }
    }
}

}  // namespace sitfit::geom
