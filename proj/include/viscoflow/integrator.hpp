#pragma once

#include <functional>
#include <string>
#include <vector>

#include "viscoflow/littlewood_paley.hpp"
#include "viscoflow/model.hpp"

namespace viscoflow::integrate {

using model::Params;
using model::PrimitiveState;

// Evolved variables of the reformulated system.  u is recovered from (d, Omega).
struct DirectState {
    SpectralField rho;
    SpectralField d;
    SpectralField omega;
    SpectralField E;

    static DirectState zeros(const GridPtr& g);
    static DirectState from_primitive(const PrimitiveState& p);
    PrimitiveState to_primitive() const;
    const GridPtr& grid() const { return rho.grid(); }

    void axpy(double h, const DirectState& o);
};

double distance(const DirectState& a, const DirectState& b);  // L2, all four variables
double magnitude(const DirectState& a);

enum class RunMode { Direct, Picard };
enum class PicardInit { Mollified, Fixed };

struct RunConfig {
    int dim = 2;
    int n = 64;
    double L = 1.0;
    calculus::LameParams lame;
    double alpha = 1.0;
    model::PressureLaw pressure = model::PressureLaw::quadratic();
    double dt = 0.05;
    double T = 20.0;
    RunMode mode = RunMode::Direct;
    int picard_iterations = 8;
    PicardInit picard_init = PicardInit::Mollified;
    double amplitude = 1e-2;  // gamma_data: sup of |u| and of |E| in the initial data
    int cadence = 1;          // norm samples every `cadence` steps
    double cfl = 0.5;
    unsigned seed = 1;
    int data_modes = 3;  // flow-map and velocity modes
    int data_kmax = 2;   // integer wavenumber bound of the initial data

    Params params() const;
    GridPtr grid() const;
    int steps() const;
    void validate() const;  // ConfigurationError on bad values
};

// Admissible initial data: a flow map with sup|E| = amplitude and a random
// smooth mean-zero velocity with sup|u| = amplitude.  The map's strain bound
// is capped at 0.45, so sup|E| saturates for large amplitudes.
PrimitiveState make_initial_data(const RunConfig& cfg);

// Frozen coefficients of one stage: convecting velocity and the sources of
// the rho, d, Omega equations plus (grad u) E for the E equation.
struct Forcing {
    SpectralField u;
    RealField u_phys;
    SpectralField L, M, N, GE;
};
Forcing make_forcing(const DirectState& s, const Params& p);

// Non-viscous part of the time derivative with frozen forcing.
DirectState explicit_rhs(const DirectState& s, const Forcing& f, const Params& p);

// dt * max|u| * max retained |xi|.
double cfl_number(const DirectState& s, double dt);

struct StepResult {
    DirectState next;
    DirectState stage;  // predictor, kept for the Picard iteration
};

// One exponential RK2 step.  The viscous symbols of d and Omega are
// integrated exactly; the rest is explicit (Heun where there is no symbol).
// at_state / at_stage supply frozen coefficients at the state and the
// predictor; when null the step is the nonlinear direct step.  Throws StepSizeError on CFL violation and StabilityError
// when max|rho| > 1/2.
StepResult imex_step(const DirectState& s, double dt, const Params& p, double cfl = 0.5,
                     const Forcing* at_state = nullptr,
                     const std::function<Forcing(const DirectState&)>* at_stage = nullptr);

// Norm history.  Columns: instantaneous rho in B~^{N/2-1,N/2}, u in B^{N/2-1},
// E in B~^{N/2-1,N/2}; running L1-in-time integrals of rho in B~^{N/2+1,N/2},
// u in B^{N/2+1}, E in B~^{N/2+1,N/2}; running sup total, L1 total and the
// B-norm (sup total + L1 total).
struct NormSample {
    double t = 0;
    double rho = 0, u = 0, E = 0;
    double rho_l1 = 0, u_l1 = 0, E_l1 = 0;
    double sup_total = 0, l1_total = 0, bnorm = 0;
};

struct NormSeries {
    std::vector<NormSample> samples;
    // integrands at the last sample, for the trapezoid rule
    double last_rho_rate = 0, last_u_rate = 0, last_E_rate = 0;
    double sup_rho = 0, sup_u = 0, sup_E = 0;

    double initial_norm() const;
    double bnorm() const;
    double gamma_measured() const;  // bnorm / initial norm (0 for zero data)
    std::string csv() const;
};

struct StateNorms {
    double rho = 0, u = 0, E = 0;
    double rho_rate = 0, u_rate = 0, E_rate = 0;
};
StateNorms state_norms(const lp::DyadicFamily& fam, const PrimitiveState& s);

// Appends a sample at time t (InputError if t does not increase).
void accumulate_norms(const lp::DyadicFamily& fam, const PrimitiveState& s, double t, NormSeries& series);
void accumulate_norms(const StateNorms& n, double t, NormSeries& series);

struct DirectRun {
    NormSeries norms;
    DirectState final_state;
    int steps = 0;
    double max_antisymmetry_defect = 0.0;
    double max_mean = 0.0;  // largest k=0 coefficient of rho, d, Omega over the run
};
// Called with each kept sample (t = 0 included).
using SampleObserver = std::function<void(double t, const DirectState& s)>;
DirectRun run_direct(const PrimitiveState& initial, const RunConfig& cfg, const SampleObserver& observer = {});

struct PicardResult {
    std::vector<NormSeries> norms;            // per iterate, index 0 is the zero iterate
    std::vector<DirectState> finals;          // final-time state per iterate
    std::vector<double> U;                    // U[n] = B-norm of iterate n+1 minus iterate n
    std::vector<double> ratios;               // U[n+1] / U[n]
    double gamma_data = 0.0;                  // initial-data norm
    std::string failure;                      // non-empty when the iteration stopped early
};

struct PicardOptions {
    bool throw_on_failure = true;
    double divergence_factor = 10.0;  // allowed B-norm / data norm
};

// Iterates the linear system with coefficients frozen at the previous
// iterate.  Iterate 0 is zero.  Throws DivergenceError when an iterate's
// B-norm exceeds divergence_factor times the data norm (unless throw_on_failure is false, in
// which case the failure is recorded and the iteration stops).
PicardResult picard_solve(const PrimitiveState& initial, const RunConfig& cfg, PicardOptions opt = {});

// Sum of Delta_q f over |q| <= m, plus the mean.
SpectralField mollify(const lp::DyadicFamily& fam, const SpectralField& f, int m);

struct UniformBoundReport {
    double gamma_data = 0.0;
    double Gamma = 0.0;        // max_n bnorm_n / gamma_data
    double smallness = 0.0;    // Gamma^2 gamma_data
    bool growth = false;       // last iterates still growing or differences not contracting
    bool violation = false;
    std::string message;
};
UniformBoundReport uniform_bound_monitor(const PicardResult& r);

}  // namespace viscoflow::integrate
