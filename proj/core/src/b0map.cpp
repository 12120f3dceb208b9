#include <cmath>
#include <random>

#include "b0spec/errors.hpp"
#include "b0spec/parallel.hpp"
#include "b0spec/synth.hpp"

namespace b0spec::synth {

B0Map gen_b0_map(const B0FieldParams& params) {
    if (params.blob_count < 0) throw InputError("blob_count must be non-negative");
    if (!(params.blob_width > 0.0)) throw InputError("blob_width must be positive");
    constexpr std::size_t n = kB0MapSize;
    constexpr double mid = 0.5 * static_cast<double>(n - 1);

    struct Blob {
        double row, col, amp;
    };
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> pos(0.0, static_cast<double>(n));
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::vector<Blob> blobs;
    for (int b = 0; b < params.blob_count; ++b) {
        const double r = pos(rng);
        const double c = pos(rng);
        blobs.push_back(Blob{r, c, params.blob_amp * amp(rng)});
    }

    B0Map map;
    const double inv2w2 = 1.0 / (2.0 * params.blob_width * params.blob_width);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            double v = params.gradient[0] * (static_cast<double>(c) - mid) +
                       params.gradient[1] * (static_cast<double>(r) - mid);
            for (const Blob& b : blobs) {
                const double dr = static_cast<double>(r) - b.row;
                const double dc = static_cast<double>(c) - b.col;
                v += b.amp * std::exp(-(dr * dr + dc * dc) * inv2w2);
            }
            map.at(r, c) = v;
        }
    }
    return map;
}

B0Map sample_b0_map(double spread_hz, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double angle = 2.0 * 3.14159265358979323846 * unit(rng);
    const double g = 0.2 + unit(rng);
    B0FieldParams p;
    p.gradient = {g * std::cos(angle), g * std::sin(angle)};
    p.blob_count = 1 + static_cast<int>(unit(rng) * 4.0);
    p.blob_amp = 20.0 + 40.0 * unit(rng);
    p.blob_width = 12.0 + 28.0 * unit(rng);
    p.seed = derive_seed(seed, 1);
    B0Map shape = gen_b0_map(p);
    const double m = shape.mean();
    const double sd = shape.stddev();
    const double scale = sd > 0.0 ? spread_hz / sd : 0.0;
    for (double& v : shape.values()) v = (v - m) * scale;
    return shape;
}

}  // namespace b0spec::synth
