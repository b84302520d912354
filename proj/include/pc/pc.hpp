// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pc/allocator.hpp"
#include "pc/backend.hpp"
#include "pc/compressor.hpp"
#include "pc/config.hpp"
#include "pc/dataset.hpp"
#include "pc/error.hpp"
#include "pc/guiding.hpp"
#include "pc/harness.hpp"
#include "pc/remote_client.hpp"
#include "pc/report.hpp"
#include "pc/retriever.hpp"
#include "pc/synthetic.hpp"
#include "pc/toy_backends.hpp"
#include "pc/types.hpp"
