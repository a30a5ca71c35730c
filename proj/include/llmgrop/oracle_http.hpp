#pragma once
/**
 * @file
 * @brief Completions-endpoint backend (blocking, one request per prompt).
 *
 * Define CPPHTTPLIB_OPENSSL_SUPPORT before including to allow https URLs.
 */

#include <llmgrop/error.hpp>
#include <llmgrop/oracle.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <regex>
#include <string>

namespace llmgrop
{
    struct Endpoint
    {
        std::string scheme = "http";
        std::string host;
        int port = 80;
        std::string path = "/";
    };

    /// Split "scheme://host[:port][/path]".
    inline Endpoint parse_endpoint (const std::string &url)
    {
        static const std::regex re (R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)", std::regex::icase);
        std::smatch m;
        if (!std::regex_match (url, m, re))
            throw BackendError ("bad oracle endpoint URL: " + url);
        Endpoint e;
        e.scheme = detail::lower (m[1].str ());
        e.host = m[2].str ();
        e.port = m[3].matched ? std::stoi (m[3].str ()) : (e.scheme == "https" ? 443 : 80);
        e.path = m[4].matched ? m[4].str () : "/";
        return e;
    }

    /// Request body for one completion; field names follow the completions wire format.
    inline nlohmann::json completion_request (const std::string &prompt, const OracleConfig &cfg)
    {
        return {{"model", cfg.model},
                {"prompt", prompt},
                {"temperature", cfg.temperature},
                {"top_p", cfg.top_p},
                {"max_tokens", cfg.max_length},
                {"frequency_penalty", cfg.frequency_penalty},
                {"presence_penalty", cfg.presence_penalty}};
    }

    class HttpBackend final : public LanguageModel
    {
      public:
        HttpBackend (std::string url, std::string api_key, OracleConfig cfg)
            : endpoint_ (parse_endpoint (url)), key_ (std::move (api_key)), cfg_ (std::move (cfg))
        {
        }

        /// Endpoint and key from ORACLE_API_URL / ORACLE_API_KEY.
        static HttpBackend from_env (const OracleConfig &cfg)
        {
            const char *url = std::getenv ("ORACLE_API_URL");
            const char *key = std::getenv ("ORACLE_API_KEY");
            return HttpBackend (url && *url ? url : "https://api.openai.com/v1/completions", key ? key : "", cfg);
        }

        std::string complete (const std::string &prompt) override
        {
            httplib::Result res = post (completion_request (prompt, cfg_).dump ());
            if (!res)
                throw BackendError ("oracle request failed: " + httplib::to_string (res.error ()));
            if (res->status != 200)
                throw BackendError ("oracle returned HTTP " + std::to_string (res->status) + ": " + res->body);
            try
            {
                const auto body = nlohmann::json::parse (res->body);
                return body.at ("choices").at (0).at ("text").get<std::string> ();
            }
            catch (const nlohmann::json::exception &e)
            {
                throw BackendError (std::string ("malformed oracle response: ") + e.what ());
            }
        }

        const Endpoint &endpoint () const noexcept { return endpoint_; }

      private:
        httplib::Result post (const std::string &body)
        {
            httplib::Headers headers;
            if (!key_.empty ())
                headers.emplace ("Authorization", "Bearer " + key_);
            const auto secs = static_cast<time_t> (cfg_.timeout);
            if (endpoint_.scheme == "https")
            {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
                httplib::SSLClient cli (endpoint_.host, endpoint_.port);
                cli.set_connection_timeout (secs);
                cli.set_read_timeout (secs);
                return cli.Post (endpoint_.path, headers, body, "application/json");
#else
                throw BackendError ("https endpoints need a build with OpenSSL support");
#endif
            }
            httplib::Client cli (endpoint_.host, endpoint_.port);
            cli.set_connection_timeout (secs);
            cli.set_read_timeout (secs);
            return cli.Post (endpoint_.path, headers, body, "application/json");
        }

        Endpoint endpoint_;
        std::string key_;
        OracleConfig cfg_;
    };
} // namespace llmgrop
