#pragma once

#include <array>
#include <string>
#include <vector>

#include "viscoflow/model.hpp"
#include "viscoflow/spectral.hpp"

namespace viscoflow::constraints {

// Displacement phi(y) = sum_m amp_m cos(k_m . y / L + phase_m), evaluated
// analytically.  The Lagrangian map is X(y) = y + eps phi(y).
struct FlowMap {
    struct Mode {
        std::array<int, 3> k{0, 0, 0};
        std::array<double, 3> amp{0, 0, 0};
        double phase = 0.0;
    };
    int dim = 2;
    double L = 8.0;
    double eps = 0.0;
    std::vector<Mode> modes;

    // Random modes with integer wavevectors in [-kmax, kmax]^dim, unit-scale
    // amplitudes.
    static FlowMap random(int dim, double L, double eps, int n_modes, int kmax, unsigned seed);

    void displacement(const double* y, double* phi) const;
    // grad[i*dim + j] = d_j phi_i
    void gradient(const double* y, double* grad) const;
    // Upper bound for eps * sup |grad phi| (sum of mode contributions).
    double strain_bound() const;
};

struct AdmissibleData {
    RealField rho_hat;  // total density
    RealField F;        // deformation gradient
    model::PrimitiveState state;
    double max_det_defect = 0.0;  // max |det F * rho_hat - 1|
    int max_iterations = 0;       // fixed-point iterations used (worst point)
};

// Eulerian density and deformation gradient carried by the flow map:
// F(x) = I + eps grad phi(y(x)), rho_hat = 1/det F, with y(x) the inverse map.
// u0 (optional, vector) is copied into the state.
AdmissibleData generate_admissible(const GridPtr& g, const FlowMap& map, const SpectralField* u0 = nullptr);

// d_i(rho_hat F_ij) for each j (column divergence), from perturbation fields.
SpectralField div_defect(const SpectralField& rho, const SpectralField& E);
// Its L2 norm.
double div_residual(const SpectralField& rho, const SpectralField& E);
// ||div(rho_hat F^T)|| straight from total fields (rho_hat, F) sampled on the grid.
double div_residual(const RealField& rho_hat, const RealField& F);

struct CurlMeasure {
    double l2_max = 0.0;       // max_{ijk} ||m_ijk||_{L2}
    double l2_sum_sq = 0.0;    // sum_{ijk} ||m_ijk||_{L2}^2
    double pointwise_max = 0.0;  // max_x sum_{ijk} m_ijk(x)^2
};
// m_ijk = d_k E_ij - d_j E_ik + E_lk d_l E_ij - E_lj d_l E_ik
CurlMeasure curl_measure(const SpectralField& E);
double curl_residual(const SpectralField& E);

// Kinematic system with a prescribed steady velocity:
//   rho_t = -div((1+rho) u),  E_t = -u.grad E + grad u + grad u E.
struct KinematicState {
    SpectralField rho;
    SpectralField E;
};
KinematicState kinematic_rhs(const KinematicState& s, const SpectralField& u);
KinematicState kinematic_rk4_step(const KinematicState& s, const SpectralField& u, double dt);

struct ConstraintSample {
    double t = 0.0;
    double div_res = 0.0;
    CurlMeasure curl;
    double grad_u_inf = 0.0;  // max_x |grad u|_F
    double div_u_inf = 0.0;   // max_x |div u|
};

double grad_inf(const SpectralField& u);
double div_inf(const SpectralField& u);
ConstraintSample sample_constraints(double t, const SpectralField& rho, const SpectralField& E, const SpectralField& u);

struct MajorantCheck {
    std::vector<double> value;     // quantity tracked
    std::vector<double> majorant;  // bound (before allowance)
    double worst_ratio = 0.0;      // max value / (allowance * majorant + floor)
    bool holds = true;
};

struct ConstraintReport {
    std::vector<ConstraintSample> samples;
    // ||div(rho F^T)||^2 against exp((1/2) int ||grad u||_inf), as displayed
    MajorantCheck div_stated;
    // ||div(rho F^T)||^2 against exp(int ||div u||_inf)
    MajorantCheck div_corrected;
    // pointwise curl quantity against exp(2 int ||grad u||_inf)
    MajorantCheck curl_pointwise;
    // L2 curl quantity against exp(2 int ||grad u||_inf)
    MajorantCheck curl_l2_stated;
    // L2 curl quantity against exp(int (2 ||grad u||_inf + ||div u||_inf))
    MajorantCheck curl_l2_corrected;
};

// Absolute allowances for integrator and truncation error, in the units of
// the tracked quantities (squared L2 residual, pointwise and L2 curl sums).
struct Floors {
    double div_sq = 0.0;
    double curl_pointwise = 0.0;
    double curl_l2_sq = 0.0;
};

// Majorant checks along sampled trajectories.  `floor` is an absolute
// allowance on the residual norms (0 for seeded residuals).
ConstraintReport gronwall_check(const std::vector<ConstraintSample>& samples, double allowance = 1.1,
                                double floor = 0.0);
ConstraintReport gronwall_check(const std::vector<ConstraintSample>& samples, double allowance, const Floors& floors);
// 10x the initial value plus the largest value seen on a coarser rerun, per quantity.
Floors integrator_floors(const std::vector<ConstraintSample>& fine, const std::vector<ConstraintSample>& coarse);

// Runs the kinematic system and samples constraints every `every` steps.
std::vector<ConstraintSample> kinematic_trajectory(const KinematicState& s0, const SpectralField& u, double dt,
                                                   int steps, int every = 1);

// ---- studies (2D) ---------------------------------------------------------

// Steady smooth velocities of amplitude amp: 0 compressive, 1 shear, 2 mixed.
SpectralField study_velocity(const GridPtr& g, int variant, double amp);
// Admissible flow-map state plus a smooth E_11 perturbation scaled so the
// divergence residual equals r0.
KinematicState seeded_state(const GridPtr& g, double eps, double r0, unsigned seed = 5);
// rho = 0, E = Hessian of a smooth potential (curl residual nonzero at O(amp^2)).
KinematicState hessian_state(const GridPtr& g, double amp);

struct StudyConfig {
    int n = 64;
    double L = 8.0;
    double seed_eps = 0.3;
    double r0 = 1e-4;
    double u_amp = 0.4;
    int admissible_n = 128;  // resolved so the residual is integrator error through T = 10
    double admissible_eps = 0.05;
    double admissible_u = 0.2;
    double dt = 0.05;
    int steps = 200;
    int every = 4;
};

struct TrajectoryResult {
    std::string label;
    ConstraintReport report;
    Floors floors{};  // absolute allowances used (admissible runs only)
    bool corrected_hold() const;
};

// Ten trajectories: seeded-residual and Hessian data under the three study
// velocities, admissible data under the three velocities (with an
// integrator-error floor from a 2 dt rerun), and one weak seeded run.
std::vector<TrajectoryResult> majorant_study(const StudyConfig& cfg);

struct RefinementRow {
    int n = 0;
    double div_res = 0.0;
    double curl_res = 0.0;
};
std::vector<RefinementRow> refinement_study(double L, double eps, const std::vector<int>& ns, unsigned seed = 3);

}  // namespace viscoflow::constraints
