#pragma once

#include "portrules/ald.hpp"
#include "portrules/alloc_multi.hpp"
#include "portrules/alloc_uni.hpp"
#include "portrules/error.hpp"
#include "portrules/longterm.hpp"
#include "portrules/numeric.hpp"
#include "portrules/precision.hpp"
#include "portrules/returns_io.hpp"
#include "portrules/utility.hpp"
#include "portrules/worstcase.hpp"
