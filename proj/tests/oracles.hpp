#pragma once

// Reference formulas for test expectations. Written independently of the
// library code: no shared helpers, different algorithms where possible.

#include <cmath>
#include <limits>

namespace oracle {

// M/M/c mean response time from the textbook sum form of Erlang's C
// formula (the library uses the Erlang-B recursion).
inline double mmc_response_time(double lambda, int c, double mu)
{
    if (lambda <= 0.0)
        return 1.0 / mu;
    const double a = lambda / mu;
    if (a >= c)
        return std::numeric_limits<double>::infinity();
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < c; ++k) {
        sum += term;            // a^k / k!
        term *= a / (k + 1);    // becomes a^(k+1)/(k+1)!
    }
    const double tail = term * c / (c - a); // a^c/c! * c/(c-a)
    const double p_wait = tail / (sum + tail);
    return p_wait / (c * mu - lambda) + 1.0 / mu;
}

inline double mm1_response_time(double lambda, double mu) { return 1.0 / (mu - lambda); }

// Utility increment for one period written straight from the formula.
inline double utility_increment(double tau, double lambda, double d, double r, double s,
                                double rev_opt = 1.5, double rev_man = 1.0, double cost = 0.1,
                                double rt_thr = 0.75, double pen = 1.0)
{
    double revenue = 0.0;
    if (r <= rt_thr)
        revenue = tau * lambda * (d * rev_opt + (1 - d) * rev_man);
    else
        revenue = tau * lambda * rev_man * pen * std::fmax(0.0, 1.0 - r / (2 * rt_thr));
    return revenue - tau * s * cost;
}

inline bool within_rel(double got, double want, double tol) { return std::fabs(got - want) <= tol * std::fabs(want); }

} // namespace oracle
