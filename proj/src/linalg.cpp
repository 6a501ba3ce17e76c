#include "branchtrace/linalg.hpp"

#include "branchtrace/errors.hpp"

#include <cmath>

namespace branchtrace::linalg {

SingularValueSummary singular_value_summary(const Matrix& m) {
    if (m.size() == 0) return {};
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    return {s(0), s(s.size() - 1)};
}

int lu_det_sign(const Matrix& m) {
    if (m.rows() != m.cols())
        throw Error(ErrorKind::Shape, "lu_det_sign: matrix is not square");
    if (m.rows() == 0) return 1;
    Eigen::PartialPivLU<Matrix> lu(m);
    int sign = static_cast<int>(lu.permutationP().determinant());
    const auto& packed = lu.matrixLU();
    for (Index i = 0; i < packed.rows(); ++i) {
        const double pivot = packed(i, i);
        if (pivot == 0.0) return 0;
        if (pivot < 0.0) sign = -sign;
    }
    return sign;
}

Matrix null_space(const Matrix& wide, double rank_tol) {
    const Index cols = wide.cols();
    Eigen::ColPivHouseholderQR<Matrix> qr(wide.transpose());
    qr.setThreshold(rank_tol);
    const Index rank = qr.rank();
    Matrix q = qr.householderQ() * Matrix::Identity(cols, cols);
    return q.rightCols(cols - rank);
}

double inf_norm(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

} // namespace branchtrace::linalg
