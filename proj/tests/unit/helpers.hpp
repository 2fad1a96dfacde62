#pragma once

#include "errors.hpp"
#include "fnspace.hpp"
#include "rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

namespace testutil {

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, funcscan::Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = rng.normal();
    return m;
}

inline Eigen::VectorXd normal_vector(Eigen::Index n, funcscan::Rng& rng) {
    return normal_matrix(n, 1, rng).col(0);
}

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

template <typename F>
funcscan::ErrorKind error_kind_of(F&& f) {
    try {
        f();
    } catch (const funcscan::Error& e) {
        return e.kind();
    }
    FAIL("expected a funcscan::Error");
    return funcscan::ErrorKind::InvalidArgument;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("funcscan_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
