#pragma once

// Gate constructors. Rotation convention: R_a(angle) = exp(-i*angle*sigma_a/2).
// Controlled gates put the control on the most significant qubit of the block.

#include "qcmm/qtensor.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

enum class Axis { X, Y, Z };

Mat rotation_matrix(Axis axis, double angle);
GateMatrix rotation(Axis axis, double angle);
// d/dangle of rotation_matrix: (-i/2) sigma_a R_a(angle).
Mat rotation_derivative(Axis axis, double angle);

// u3(theta, phi, lambda) =
//   [ cos(t/2)            -e^{i lambda} sin(t/2)      ]
//   [ e^{i phi} sin(t/2)   e^{i(phi+lambda)} cos(t/2) ]
Mat u3_matrix(double theta, double phi, double lambda);
GateMatrix u3(double theta, double phi, double lambda);
Mat u3_derivative(int which, double theta, double phi, double lambda);

// control_on_one=false fires when the control is |0>.
Mat controlled_matrix(const Mat& base, bool control_on_one);
GateMatrix controlled(const GateMatrix& base, bool control_on_one = true);

// (I - |11><11|) (x) I  +  |11><11| (x) R_y(theta), controls on the two most
// significant qubits.
GateMatrix cc_ry(double theta);

GateMatrix hadamard();
GateMatrix pauli_x_gate();
GateMatrix cnot();
GateMatrix cz();

}  // namespace qcmm
