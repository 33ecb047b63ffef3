#pragma once

#include <string>

namespace httplib {
class Client;
}

namespace drp {

struct HttpEndpoint {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // "" or "/some/prefix" without trailing slash
};

// "https://api.example.com/proxy/" -> {"https://api.example.com", "/proxy"}
[[nodiscard]] HttpEndpoint split_base_url(const std::string& base_url);

// Value of DRP_API_KEY, or empty.
[[nodiscard]] std::string api_key_from_env();

void configure_client(httplib::Client& client, double timeout_s, const std::string& api_key);

}  // namespace drp
