#pragma once

// Umbrella header. The HTTP transport lives in <corver/http_service.hpp>.

#include <corver/corpus_index.hpp>
#include <corver/cooc_query.hpp>
#include <corver/data_pipeline.hpp>
#include <corver/engine.hpp>
#include <corver/extractor.hpp>
#include <corver/grading.hpp>
#include <corver/json_io.hpp>
#include <corver/returns.hpp>
#include <corver/reward.hpp>
#include <corver/segmentation.hpp>
#include <corver/service.hpp>
#include <corver/suffix_array.hpp>
#include <corver/text_index.hpp>
#include <corver/tokenizer.hpp>
#include <corver/triplet.hpp>
#include <corver/unicode.hpp>
