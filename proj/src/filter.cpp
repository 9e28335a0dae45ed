#include "mtmse/filter.hpp"

#include <deque>
#include <stdexcept>
#include <string>

#include "mtmse/linalg.hpp"

namespace mtmse {

KalmanState kalman_init(const LinearSystem& system) {
    KalmanState s;
    s.t = 1;
    s.x_hat = Eigen::VectorXd::Zero(system.state_dim());
    s.P = linalg::symmetrize(system.Sigma_x);
    s.K = Eigen::MatrixXd::Zero(system.state_dim(), system.total_measurement_dim());
    return s;
}

KalmanState kalman_step(const KalmanState& state, const LinearSystem& system,
                        const Eigen::VectorXd& y) {
    const Eigen::MatrixXd C = system.stacked_C();
    const Eigen::MatrixXd R = system.stacked_R();
    if (y.size() != C.rows()) throw std::invalid_argument("kalman_step: measurement dimension");

    const Eigen::MatrixXd innovation_cov = linalg::symmetrize(C * state.P * C.transpose() + R);
    Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("kalman_step: innovation covariance is not positive definite");

    KalmanState next;
    next.t = state.t + 1;
    next.K = llt.solve(C * state.P).transpose();  // P C' (C P C' + R)^{-1}
    next.x_hat = system.A * state.x_hat +
                 system.A * next.K * (y - C * state.x_hat);
    const Eigen::MatrixXd delta = Eigen::MatrixXd::Identity(state.P.rows(), state.P.cols()) -
                                  next.K * C;
    Eigen::MatrixXd P = system.A * delta * state.P * delta.transpose() * system.A.transpose() +
                        system.A * next.K * R * next.K.transpose() * system.A.transpose() +
                        system.Q;
    next.P = linalg::symmetrize(P);
    // K stored in `next` is the gain applied at time state.t.
    return next;
}

NoiseAggregates noise_aggregate_covariances(const InfoStructure& info,
                                            const LocalObservationModel& lom,
                                            const LinearSystem& system, int t) {
    if (t < 1) throw std::invalid_argument("noise_aggregate_covariances: t >= 1");
    const int n = info.n;
    const int dx = system.state_dim();
    const int max_lag = std::min(lom.tau_star - 1, t - 1);  // valid process-noise lags

    // A^(m-1) Q for the state-side noise aggregate, m = 1..max_lag.
    std::vector<Eigen::MatrixXd> AQ(max_lag);
    {
        Eigen::MatrixXd Ap = Eigen::MatrixXd::Identity(dx, dx);
        for (int m = 1; m <= max_lag; ++m) {
            AQ[m - 1] = Ap * system.Q;
            Ap = system.A * Ap;
        }
    }

    NoiseAggregates agg;
    agg.t = t;
    agg.Sigma_w = Eigen::MatrixXd::Zero(dx, dx);
    {
        Eigen::MatrixXd Am = Eigen::MatrixXd::Identity(dx, dx);
        for (int m = 1; m <= max_lag; ++m) {
            agg.Sigma_w += AQ[m - 1] * Am.transpose();
            Am = system.A * Am;
        }
    }

    const LocalBlocksAtTime at = local_blocks_at(lom, t);

    // Row blocks carry their own w(t-m) coefficient tables; an entry with
    // lag k is fed by lags m in {k+1, ..., max_lag}.
    std::vector<std::vector<const LocalObservationModel::RowBlock*>> live(n);
    for (int i = 0; i < n; ++i)
        for (const auto& rb : lom.blocks[i])
            if (t - rb.entry.lag >= 1) live[i].push_back(&rb);

    agg.P_sigma.resize(n);
    for (int i = 0; i < n; ++i) {
        agg.P_sigma[i] = Eigen::MatrixXd::Zero(dx, at.local_dim[i]);
        Eigen::Index col = 0;
        for (const auto* rb : live[i]) {
            const int rows = system.measurement_dim(rb->entry.source);
            for (int m = rb->entry.lag + 1; m <= max_lag; ++m)
                agg.P_sigma[i].middleCols(col, rows) +=
                    AQ[m - 1] * rb->w_coeff[m - rb->entry.lag - 1].transpose();
            col += rows;
        }
    }

    agg.P_w.assign(n, std::vector<Eigen::MatrixXd>(n));
    agg.P_v.assign(n, std::vector<Eigen::MatrixXd>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Eigen::MatrixXd w = Eigen::MatrixXd::Zero(at.local_dim[i], at.local_dim[j]);
            Eigen::MatrixXd v = Eigen::MatrixXd::Zero(at.local_dim[i], at.local_dim[j]);
            Eigen::Index r = 0;
            for (const auto* bi : live[i]) {
                const int ri = system.measurement_dim(bi->entry.source);
                Eigen::Index c = 0;
                for (const auto* bj : live[j]) {
                    const int cj = system.measurement_dim(bj->entry.source);
                    for (int m = std::max(bi->entry.lag, bj->entry.lag) + 1; m <= max_lag; ++m)
                        w.block(r, c, ri, cj) +=
                            bi->w_coeff[m - bi->entry.lag - 1] * system.Q *
                            bj->w_coeff[m - bj->entry.lag - 1].transpose();
                    if (bi->entry == bj->entry) v.block(r, c, ri, cj) = system.R[bi->entry.source];
                    c += cj;
                }
                r += ri;
            }
            agg.P_w[i][j] = std::move(w);
            agg.P_v[i][j] = std::move(v);
        }
    return agg;
}

CovarianceSet innovation_covariances(const NoiseAggregates& noise,
                                     const Eigen::MatrixXd& P_delayed,
                                     const LocalObservationModel& lom,
                                     const LinearSystem& system, int t,
                                     const std::vector<std::vector<bool>>* pair_needed) {
    CovarianceSet cov;
    cov.t = t;
    cov.blocks = local_blocks_at(lom, t);

    const int n = static_cast<int>(lom.blocks.size());
    for (int i = 0; i < n; ++i)
        if (noise.P_v[i][i].rows() != cov.blocks.local_dim[i])
            throw std::invalid_argument(
                "innovation_covariances: noise aggregates were computed for a different time");

    const Eigen::MatrixXd Ap = linalg::matrix_power(system.A, t - cov.blocks.t0);
    const Eigen::MatrixXd ApP = Ap * P_delayed;

    cov.Sigma_hat.assign(n, std::vector<Eigen::MatrixXd>(n));
    cov.Theta_hat.resize(n);
    for (int i = 0; i < n; ++i) {
        cov.Theta_hat[i] = ApP * cov.blocks.C_loc[i].transpose() + noise.P_sigma[i];
        for (int j = 0; j < n; ++j) {
            if (pair_needed && !(*pair_needed)[i][j]) continue;  // block never read
            cov.Sigma_hat[i][j] = cov.blocks.C_loc[i] * P_delayed *
                                      cov.blocks.C_loc[j].transpose() +
                                  noise.P_w[i][j] + noise.P_v[i][j];
        }
    }
    cov.P0 = linalg::symmetrize(ApP * Ap.transpose() + noise.Sigma_w);
    return cov;
}

namespace {

// Per-step cost of the per-agent MMSE strategy z_i = L_i (x_com + K_i itilde_i),
// K_i = Theta_hat_i Sigma_hat_ii^{-1}, evaluated under the coupled cost.
// Terms with S_ij = 0 vanish, so masked covariance sets suffice.
double mmse_step_cost(const CovarianceSet& cov, const CostModel& cost,
                      const Eigen::MatrixXd& LSL) {
    const int n = cost.agent_count();
    std::vector<Eigen::MatrixXd> K(n);
    for (int i = 0; i < n; ++i) {
        Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(cov.Sigma_hat[i][i]));
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("mmse cost: singular local innovation covariance");
        K[i] = llt.solve(cov.Theta_hat[i].transpose()).transpose();
    }
    double step = (LSL * cov.P0).trace();
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cost.output_dim(i), K[i].cols());
        for (int j = 0; j < n; ++j) {
            if (i != j && cost.coupling_is_zero(i, j)) continue;
            acc += cost.S[i][j] * cost.L[j] *
                   (K[j] * cov.Sigma_hat[j][i] - 2.0 * cov.Theta_hat[i]);
        }
        step += (K[i].transpose() * cost.L[i].transpose() * acc).trace();
    }
    return step;
}

}  // namespace

GainSchedule gain_schedule(const LinearSystem& system, const CostModel& cost,
                           const InfoStructure& info, const LocalObservationModel& lom, int T,
                           bool exploit_sparsity) {
    if (T < 1) throw std::invalid_argument("gain_schedule: T >= 1");
    system.check_dimensions();
    cost.check_dimensions(system.state_dim());
    if (cost.agent_count() != system.agent_count() || info.n != system.agent_count())
        throw std::invalid_argument("gain_schedule: agent count mismatch");

    const int n = info.n;
    std::vector<std::vector<bool>> needed(n, std::vector<bool>(n, true));
    if (exploit_sparsity)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                needed[i][j] =
                    (i == j) || !cost.coupling_is_zero(i, j) || !cost.coupling_is_zero(j, i);

    GainSchedule sched;
    sched.T = T;
    sched.tau_star = info.tau_star;
    sched.kalman_gain.resize(T);
    sched.F.resize(T);
    sched.step_cost.resize(T);
    sched.mmse_step_cost.resize(T);

    // Prediction covariances P(1..T) and gains K(1..T).
    std::vector<Eigen::MatrixXd> P(T + 1);
    KalmanState ks = kalman_init(system);
    const Eigen::MatrixXd C = system.stacked_C();
    const Eigen::MatrixXd R = system.stacked_R();
    P[1] = ks.P;
    for (int t = 1; t <= T; ++t) {
        Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(C * P[t] * C.transpose() + R));
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("gain_schedule: innovation covariance not PD at t=" +
                                     std::to_string(t));
        sched.kalman_gain[t - 1] = llt.solve(C * P[t]).transpose();
        if (t < T) {
            const Eigen::MatrixXd delta =
                Eigen::MatrixXd::Identity(P[t].rows(), P[t].cols()) - sched.kalman_gain[t - 1] * C;
            P[t + 1] = linalg::symmetrize(
                system.A * delta * P[t] * delta.transpose() * system.A.transpose() +
                system.A * sched.kalman_gain[t - 1] * R * sched.kalman_gain[t - 1].transpose() *
                    system.A.transpose() +
                system.Q);
        }
    }

    NoiseAggregates stationary;  // aggregates are constant for t >= tau*
    bool have_stationary = false;
    const Eigen::MatrixXd L = cost.assembled_L();
    const Eigen::MatrixXd S = cost.assembled_S();
    const Eigen::MatrixXd LSL = L.transpose() * S * L;

    for (int t = 1; t <= T; ++t) {
        const int t0 = std::max(1, t - info.tau_star + 1);
        const NoiseAggregates* noise;
        NoiseAggregates scratch;
        if (t >= info.tau_star) {
            if (!have_stationary) {
                stationary = noise_aggregate_covariances(info, lom, system, t);
                have_stationary = true;
            }
            noise = &stationary;
        } else {
            scratch = noise_aggregate_covariances(info, lom, system, t);
            noise = &scratch;
        }
        CovarianceSet cov = innovation_covariances(*noise, P[t0], lom, system, t, &needed);
        TeamGains gains = solve_gain_equation(cov.Sigma_hat, cov.Theta_hat, cost);
        sched.F[t - 1] = gains.F;
        sched.max_residual = std::max(sched.max_residual, gains.residual);
        sched.step_cost[t - 1] = (LSL * cov.P0).trace() - gains.eta.dot(gains.f);
        sched.mmse_step_cost[t - 1] = mmse_step_cost(cov, cost, LSL);
    }
    return sched;
}

double optimal_cost_finite(const GainSchedule& schedule) {
    if (static_cast<int>(schedule.step_cost.size()) != schedule.T)
        throw std::invalid_argument(
            "optimal_cost_finite: schedule carries no cost terms (loaded from a gain file?)");
    double total = 0.0;
    for (int t = 1; t <= schedule.T; ++t) {
        const double term = schedule.step_cost[t - 1];
        if (term < -Tolerances::residual * (1.0 + std::abs(total)))
            throw std::runtime_error("optimal_cost_finite: negative per-step term at t=" +
                                     std::to_string(t));
        total += std::max(term, 0.0);
    }
    return total;
}

OnlineFilter::OnlineFilter(const LinearSystem& system, const InfoStructure& info,
                           const LocalObservationModel& lom,
                           std::vector<Eigen::MatrixXd> kalman_gains)
    : system_(system), n_(info.n), tau_star_(info.tau_star),
      kalman_gains_(std::move(kalman_gains)), C_(system.stacked_C()) {
    agent_offset_.assign(n_ + 1, 0);
    for (int i = 0; i < n_; ++i)
        agent_offset_[i + 1] = agent_offset_[i] + system_.measurement_dim(i);
    A_pow_.resize(tau_star_);
    A_pow_[0] = Eigen::MatrixXd::Identity(system_.state_dim(), system_.state_dim());
    for (int p = 1; p < tau_star_; ++p) A_pow_[p] = system_.A * A_pow_[p - 1];
    // Block shapes change only during warm-up; the view at t = tau* serves
    // every later step, leaving pure matrix-vector work per step.
    views_.reserve(tau_star_);
    for (int t = 1; t <= tau_star_; ++t) views_.push_back(local_blocks_at(lom, t));
    reset();
}

void OnlineFilter::reset() {
    x_hat_ = Eigen::VectorXd::Zero(system_.state_dim());
    anchor_ = 1;
    window_.clear();
}

OnlineFilter::View OnlineFilter::step(int t, const Eigen::VectorXd& y) {
    if (y.size() != C_.rows())
        throw std::invalid_argument("OnlineFilter: measurement length mismatch at t=" +
                                    std::to_string(t));
    window_.push_back(y);
    if (static_cast<int>(window_.size()) > tau_star_ + 1) window_.pop_front();

    const int t0 = std::max(1, t - tau_star_ + 1);
    if (t0 > anchor_) {
        // The oldest buffered measurement has just become common; fold it in.
        if (anchor_ > static_cast<int>(kalman_gains_.size()))
            throw std::runtime_error("OnlineFilter: Kalman gain horizon exceeded");
        const Eigen::VectorXd& y_common = window_.front();
        x_hat_ = system_.A * x_hat_ +
                 system_.A * kalman_gains_[anchor_ - 1] * (y_common - C_ * x_hat_);
        window_.pop_front();
        ++anchor_;
    }

    View view;
    const LocalBlocksAtTime& at = views_[std::min(t, tau_star_) - 1];
    view.x_com = A_pow_[t - t0] * x_hat_;
    view.innovation.resize(n_);
    for (int i = 0; i < n_; ++i) {
        Eigen::VectorXd local(at.local_dim[i]);
        Eigen::Index r = 0;
        for (const auto& e : at.entries[i]) {
            // window.back() is y(t); entry lag k selects y(t - k).
            const Eigen::VectorXd& ylag = window_[window_.size() - 1 - e.lag];
            const int d = system_.measurement_dim(e.source);
            local.segment(r, d) = ylag.segment(agent_offset_[e.source], d);
            r += d;
        }
        view.innovation[i] = local - at.C_loc[i] * x_hat_;
    }
    return view;
}

std::vector<std::vector<Eigen::VectorXd>> run_filter(const LinearSystem& system,
                                                     const CostModel& cost,
                                                     const InfoStructure& info,
                                                     const LocalObservationModel& lom,
                                                     const GainSchedule& schedule,
                                                     const std::vector<Eigen::VectorXd>& y) {
    const int T = static_cast<int>(y.size());
    if (T > schedule.T) throw std::invalid_argument("run_filter: schedule horizon too short");
    const int n = info.n;
    OnlineFilter filter(system, info, lom, schedule.kalman_gain);
    std::vector<std::vector<Eigen::VectorXd>> z(T, std::vector<Eigen::VectorXd>(n));
    for (int t = 1; t <= T; ++t) {
        const OnlineFilter::View view = filter.step(t, y[t - 1]);
        for (int i = 0; i < n; ++i)
            z[t - 1][i] = cost.L[i] * view.x_com + schedule.F[t - 1][i] * view.innovation[i];
    }
    return z;
}

std::pair<Eigen::MatrixXd, int> riccati_fixed_point(const LinearSystem& system,
                                                    const Eigen::MatrixXd& start,
                                                    const SteadyStateOptions& options) {
    const Eigen::MatrixXd C = system.stacked_C();
    const Eigen::MatrixXd R = system.stacked_R();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(system.state_dim(), system.state_dim());
    Eigen::MatrixXd P = linalg::symmetrize(start);
    for (int it = 1; it <= options.max_iterations; ++it) {
        Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(C * P * C.transpose() + R));
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("riccati_fixed_point: innovation covariance not PD");
        const Eigen::MatrixXd K = llt.solve(C * P).transpose();
        const Eigen::MatrixXd delta = I - K * C;
        Eigen::MatrixXd next = linalg::symmetrize(
            system.A * delta * P * delta.transpose() * system.A.transpose() +
            system.A * K * R * K.transpose() * system.A.transpose() + system.Q);
        const double change = (next - P).norm() / std::max(1.0, P.norm());
        P = next;
        if (change < options.rel_tol) return {P, it};
    }
    throw std::runtime_error(
        "riccati_fixed_point: no convergence within the iteration cap; the system likely "
        "violates the stabilizability/detectability assumptions");
}

SteadyState steady_state(const LinearSystem& system, const CostModel& cost,
                         const InfoStructure& info, const LocalObservationModel& lom,
                         const SteadyStateOptions& options) {
    system.check_dimensions();
    cost.check_dimensions(system.state_dim());

    SteadyState out;
    auto [P_bar, iterations] = riccati_fixed_point(system, system.Sigma_x, options);
    out.P_bar = P_bar;
    out.iterations = iterations;

    const Eigen::MatrixXd C = system.stacked_C();
    const Eigen::MatrixXd R = system.stacked_R();
    Eigen::LLT<Eigen::MatrixXd> llt(linalg::symmetrize(C * P_bar * C.transpose() + R));
    out.K_bar = llt.solve(C * P_bar).transpose();
    out.spectral_radius = linalg::spectral_radius(system.A - out.K_bar * C);

    // Stationary covariances: any time t >= tau* with P(t0) replaced by P_bar.
    const int t = info.tau_star;
    const NoiseAggregates noise = noise_aggregate_covariances(info, lom, system, t);
    out.stationary = innovation_covariances(noise, P_bar, lom, system, t);

    TeamGains gains = solve_gain_equation(out.stationary.Sigma_hat, out.stationary.Theta_hat,
                                          cost);
    out.F_bar = gains.F;
    out.residual = gains.residual;
    const Eigen::MatrixXd L = cost.assembled_L();
    const Eigen::MatrixXd S = cost.assembled_S();
    out.J_star = (L.transpose() * S * L * out.stationary.P0).trace() - gains.eta.dot(gains.f);
    return out;
}

}  // namespace mtmse
