#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace treesne {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// ---------------------------------------------------------------------------
// Errors. Every failure the library raises derives from treesne::Error so the
// CLI can map it onto an exit code.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data or parameters (exit code 2 in the CLI).
class DataError : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what, long iteration = -1)
        : Error(what), iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

/// Two embedding points closer than the coincidence threshold.
class CoincidentPoints : public NumericalFailure {
public:
    CoincidentPoints(std::size_t i, std::size_t j)
        : NumericalFailure("coincident embedding points " + std::to_string(i) + " and " +
                           std::to_string(j)),
          first(i),
          second(j) {}
    std::size_t first;
    std::size_t second;
};

// ---------------------------------------------------------------------------
// Embedding coordinates are stored n x d (one point per row). The Hessian and
// Jacobian act on the point-major flattening (y_1, ..., y_n).
// ---------------------------------------------------------------------------

template <typename Scalar>
Vector<Scalar> flatten(const Matrix<Scalar>& coords) {
    RowMajorMatrix<Scalar> rm = coords;
    return Eigen::Map<const Vector<Scalar>>(rm.data(), rm.size());
}

template <typename Scalar>
Matrix<Scalar> unflatten(const Vector<Scalar>& flat, Eigen::Index n, Eigen::Index d) {
    if (flat.size() != n * d) throw DataError("unflatten: size mismatch");
    return Eigen::Map<const RowMajorMatrix<Scalar>>(flat.data(), n, d);
}

/// Runs body(begin, end) over contiguous row blocks. threads <= 1 runs inline.
/// Callers write only to rows they own, so output never depends on threads.
template <typename Body>
void parallel_rows(std::size_t rows, int threads, Body&& body) {
    if (threads <= 1 || rows < 2) {
        body(std::size_t{0}, rows);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), rows);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    pool.reserve(workers);
    const std::size_t chunk = (rows + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(rows, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, &failures, w, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    // Lowest block first, matching the sequential failure order.
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
}

}  // namespace treesne
