// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "stoktok/adversarial.hpp"
#include "stoktok/enumerate.hpp"
#include "stoktok/error.hpp"
#include "stoktok/io.hpp"
#include "stoktok/metrics.hpp"
#include "stoktok/random.hpp"
#include "stoktok/samplers.hpp"
#include "stoktok/scorer.hpp"
#include "stoktok/segment_tree.hpp"
#include "stoktok/split_map.hpp"
#include "stoktok/trie.hpp"
#include "stoktok/vocab.hpp"
