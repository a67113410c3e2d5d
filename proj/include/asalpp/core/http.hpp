#pragma once

// httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen headers
// included afterwards in the same translation unit.
#include <httplib.h>
#ifdef _res
#undef _res
#endif
