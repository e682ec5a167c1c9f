#pragma once

#include "cogscore/cli.hpp"
#include "cogscore/config.hpp"
#include "cogscore/dataset.hpp"
#include "cogscore/embedding_client.hpp"
#include "cogscore/error.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/pipeline.hpp"
#include "cogscore/providers.hpp"
#include "cogscore/report.hpp"
#include "cogscore/scorers.hpp"
#include "cogscore/stats.hpp"
#include "cogscore/textnorm.hpp"
