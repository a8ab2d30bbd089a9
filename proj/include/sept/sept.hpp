// Umbrella header for the library. The CLI (sept/cli.hpp) and the HTTPS
// transport (sept/http_transport.hpp) are included separately.
#pragma once

#include "sept/numerics.hpp"
#include "sept/encoder.hpp"
#include "sept/prompting.hpp"
#include "sept/loss.hpp"
#include "sept/manifest.hpp"
#include "sept/trainer.hpp"
#include "sept/evaluation.hpp"
#include "sept/sweep.hpp"
#include "sept/synthetic.hpp"
#include "sept/llm.hpp"
