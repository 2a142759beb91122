#pragma once

#include "bcl/error.hpp"
#include "bcl/protocol.hpp"
#include "bcl/context.hpp"
#include "bcl/transform.hpp"
#include "bcl/simulator.hpp"
#include "bcl/rdf.hpp"
#include "bcl/semantic.hpp"
#include "bcl/graphstore.hpp"
#include "bcl/corpus.hpp"
