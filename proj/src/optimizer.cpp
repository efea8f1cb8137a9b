#include "cscae/optimizer.hpp"

#include "cscae/errors.hpp"

namespace cscae {

void SgdMomentum::step(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    if (!p->grad.all_finite())
      throw NumericError("non-finite gradient for parameter " + p->name);
    Tensor& v = velocity[p->name];
    if (!v.same_shape(p->value)) v = Tensor::zeros(p->value.shape());
    v.array() = momentum * v.array() - learning_rate * p->grad.array();
    p->value.array() += v.array();
  }
}

}  // namespace cscae
