#include <iomanip>
#include <iostream>

#include "bchd_orbit.hpp"

using namespace bchd_orbit;

int main()
{
    const auto sys = build_cstr2();
    std::cout << "tau,M,x1,x2,distance_to_orbit\n" << std::setprecision(10);
    for (double tau : {0.1, 0.25, 0.5, 1.0, 1.5}) {
        const auto sched = SwitchingSchedule::symmetric_bang_bang(sys, tau);
        ChainOptions opts;
        opts.polish = true;
        const auto chain = refine_chain(sys, sched, {1, 2, 3, 4}, Vec::Zero(2), {}, opts);
        const auto& orbit = chain.back();
        if (!orbit.converged) {
            std::cerr << "tau=" << tau << ": " << orbit.message << '\n';
            continue;
        }
        for (std::size_t m = 0; m + 1 < chain.size(); ++m) {
            const auto& r = chain[m];
            std::cout << tau << ',' << m + 1 << ',' << r.x_star(0) << ',' << r.x_star(1) << ',' << (r.x_star - orbit.x_star).norm() << '\n';
        }
    }
}
