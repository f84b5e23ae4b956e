#pragma once

// httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen's product
// kernels if Eigen is parsed afterwards. Include Eigen first, always.
#include <Eigen/Dense>

#include <httplib.h>
