#include "bcg/blocks.hpp"

namespace bcg {

// Extended Kalman filter for range/bearing tracking. The state is
// [x; vx; y; vy], the measurement [range; bearing].
// io: meas (2x1), xhat (4x1), P (4x4) | xhat' (4x1), P' (4x4)
void ekf_tracker(BlockRecord& blk, Flag flag) {
  if (flag != Flag::output) return;
  const BVar meas = blk.in(1);
  BVar xhat = blk.in(2);
  BVar P = blk.in(3);

  const double dt = 0.1;
  const BVar Q = MatValue::diag({0, .1, 0, .1});
  const BVar R = MatValue::diag({50.0 * 50.0, 0.005 * 0.005});
  const BVar F = MatValue::from_rows(4, 4, {1, dt, 0, 0, 0, 1, 0, 0, 0, 0, 1, dt, 0, 0, 0, 1});

  const BVar rangeHat = sqrt(xhat(1) * xhat(1) + xhat(3) * xhat(3));
  const BVar bearingHat = atan2(xhat(3), xhat(1));
  const BVar yhat = vcat(rangeHat, bearingHat);
  const BVar H = vcat(hcat({cos(bearingHat), 0.0, sin(bearingHat), 0.0}),
                      hcat({-sin(bearingHat) / rangeHat, 0.0, cos(bearingHat) / rangeHat, 0.0}));

  xhat = F * xhat;
  P = F * P * transpose(F) + Q;
  const BVar K = P * transpose(H) / (H * P * transpose(H) + R);
  const BVar resid = meas - yhat;
  xhat = xhat + K * resid;
  P = (eye(4) - K * H) * P;

  blk.out(1) = xhat;
  blk.out(2) = P;
}

}  // namespace bcg
