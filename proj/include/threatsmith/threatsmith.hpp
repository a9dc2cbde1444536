#pragma once

// Core engine: identifiers, threat library, analysis, reporting.
// The HTTP pieces (http_transport.hpp, service.hpp, cli.hpp) are separate
// because they pull in cpp-httplib.

#include "threatsmith/analysis.hpp"
#include "threatsmith/domain.hpp"
#include "threatsmith/errors.hpp"
#include "threatsmith/rate_limiter.hpp"
#include "threatsmith/reporting.hpp"
#include "threatsmith/scope_file.hpp"
#include "threatsmith/threat_library.hpp"
#include "threatsmith/vuln_source.hpp"
