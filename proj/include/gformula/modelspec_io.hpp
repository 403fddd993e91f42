#ifndef GFORMULA_MODELSPEC_IO_HPP
#define GFORMULA_MODELSPEC_IO_HPP

#include <string>

#include "gformula/model.hpp"

namespace gformula {

// Model file: one model per line, '#' comments.
//   outcome y ~ 1 + x + l family=binomial
//   covariate l ~ 1 + cum(x,1) family=binomial
//   exposure x ~ 1 + l
// family is binomial (default) or gaussian; a gaussian outcome may pin the
// scale with sigma=<value>, otherwise sigma is estimated/sampled.
ModelSpec read_model_file(const std::string& path);

// Prior file: key = value lines, '#' comments. Keys: 'default', 'intercept',
// 'log_sigma', or '<block>.<coef index>' with block 'y' or a covariate name.
// Values: normal(mean, variance), dexp(mean, rate), flat.
//   default = normal(0, 3)
//   intercept = normal(-0.6931471805599453, 1000)
//   y.2 = dexp(0, 1)
PriorSpec read_prior_file(const std::string& path, const ModelSpec& spec);

Prior parse_prior(const std::string& text);

} // namespace gformula

#endif
