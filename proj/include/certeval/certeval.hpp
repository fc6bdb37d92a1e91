#ifndef CERTEVAL_CERTEVAL_HPP_
#define CERTEVAL_CERTEVAL_HPP_

#include "certeval/answer.hpp"
#include "certeval/backends.hpp"
#include "certeval/errors.hpp"
#include "certeval/extraction.hpp"
#include "certeval/grading.hpp"
#include "certeval/metrics.hpp"
#include "certeval/pipelines.hpp"
#include "certeval/rational.hpp"
#include "certeval/rng.hpp"
#include "certeval/selection.hpp"
#include "certeval/types.hpp"

#endif  // CERTEVAL_CERTEVAL_HPP_
