#include "drp/http_util.hpp"

#include <cmath>
#include <cstdlib>

#include <httplib.h>

#include "drp/error.hpp"

namespace drp {

HttpEndpoint split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::Config, "base_url needs a scheme: '" + base_url + "'");
    const auto path_start = base_url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = base_url;
    } else {
        ep.origin = base_url.substr(0, path_start);
        ep.path_prefix = base_url.substr(path_start);
        while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
    }
    return ep;
}

std::string api_key_from_env() {
    const char* key = std::getenv("DRP_API_KEY");
    return key ? std::string(key) : std::string();
}

void configure_client(httplib::Client& client, double timeout_s, const std::string& api_key) {
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - std::floor(timeout_s)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    if (!api_key.empty()) client.set_bearer_token_auth(api_key);
}

}  // namespace drp
