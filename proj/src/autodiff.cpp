// Force instantiation of both scalar widths so breakage surfaces here
// rather than in whichever test includes the header first.
#include "nav/autodiff.hpp"

namespace nav::ad {

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace nav::ad
