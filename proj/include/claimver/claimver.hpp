#pragma once

#include "claimver/embedding.hpp"
#include "claimver/entity_linker.hpp"
#include "claimver/http_client.hpp"
#include "claimver/kg_store.hpp"
#include "claimver/llm_backend.hpp"
#include "claimver/pipeline.hpp"
#include "claimver/prompts.hpp"
#include "claimver/report.hpp"
#include "claimver/response_parser.hpp"
#include "claimver/retrieval.hpp"
#include "claimver/scoring.hpp"
#include "claimver/text.hpp"
