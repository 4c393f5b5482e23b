#include "uatrust/client/config.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <thread>
#include <unistd.h>

using namespace uatrust;
using namespace uatrust::client;
using namespace testsupport;
using codec::EndpointDescription;
using server::Server;

namespace {

EndpointDescription make_endpoint(MessageSecurityMode mode, std::string policy)
{
    EndpointDescription e;
    e.endpoint_url = "opc.tcp://127.0.0.1:4840";
    e.security_mode = mode;
    e.security_policy_uri = std::move(policy);
    return e;
}

// Independent statement of the ordering: rank by mode, then policy, earliest index wins.
std::optional<std::size_t> expected_choice(const std::vector<EndpointDescription>& eps)
{
    auto mode_score = [](MessageSecurityMode m) {
        return m == MessageSecurityMode::SignAndEncrypt ? 30 : m == MessageSecurityMode::Sign ? 20
                                                           : m == MessageSecurityMode::None   ? 10
                                                                                              : -1000;
    };
    auto policy_score = [](const std::string& p) { return p == pu::Basic256Sha256 ? 2 : p == pu::None ? 1 : -1000; };
    std::optional<std::size_t> best;
    int best_score = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto policy = eps[i].security_policy_uri.value_or("");
        const bool consistent = (policy == pu::None) == (eps[i].security_mode == MessageSecurityMode::None);
        const int score = mode_score(eps[i].security_mode) + policy_score(policy);
        if (!consistent || score < 0) continue;
        if (!best || score > best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

std::size_t secure_opens_sent(const net::Transcript& t)
{
    std::size_t n = 0;
    for (const auto& r : t.records()) {
        if (r.direction != net::Direction::Sent || r.data.size() < 12) continue;
        if (std::string(r.data.begin(), r.data.begin() + 3) != "OPN") continue;
        codec::Reader rd(ByteView(r.data).subspan(12));
        codec::UaString uri;
        codec::decode(rd, uri);
        if (uri.value_or("") != pu::None) ++n;
    }
    return n;
}

ClientConfig with_transcript(ClientConfig cfg)
{
    cfg.dial.transcript = std::make_shared<net::Transcript>("client");
    return cfg;
}

}  // namespace

TEST(SelectEndpoint, PrefersSignAndEncryptThenSignThenNone)
{
    std::vector<EndpointDescription> eps = {make_endpoint(MessageSecurityMode::None, std::string(pu::None)),
                                            make_endpoint(MessageSecurityMode::Sign, std::string(pu::Basic256Sha256)),
                                            make_endpoint(MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256)),
                                            make_endpoint(MessageSecurityMode::SignAndEncrypt,
                                                          std::string(pu::Basic256Sha256))};
    EXPECT_EQ(select_endpoint(eps), 3u);
    eps.pop_back();
    EXPECT_EQ(select_endpoint(eps), 1u);  // Basic256 cannot be spoken, so Sign wins
    eps.erase(eps.begin() + 1);
    EXPECT_EQ(select_endpoint(eps), 0u);
    eps.erase(eps.begin());
    EXPECT_EQ(client_error_of([&] { select_endpoint(eps); }).code(), ClientErrc::PolicyUnsupported);
}

TEST(SelectEndpoint, TiesGoToTheFirstListed)
{
    auto a = make_endpoint(MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256Sha256));
    auto b = a;
    b.endpoint_url = "opc.tcp://other:4840";
    EXPECT_EQ(select_endpoint({a, b}), 0u);
    EXPECT_EQ(select_endpoint({b, a}), 0u);
}

TEST(SelectEndpoint, MatchesTheOrderingOnRandomLists)
{
    const std::vector<MessageSecurityMode> modes = {MessageSecurityMode::Invalid, MessageSecurityMode::None,
                                                    MessageSecurityMode::Sign, MessageSecurityMode::SignAndEncrypt};
    const std::vector<std::string> policies = {std::string(pu::None), std::string(pu::Basic256Sha256),
                                               std::string(pu::Basic128Rsa15), "urn:bogus"};
    std::mt19937 rng(5);
    for (int round = 0; round < 2000; ++round) {
        std::vector<EndpointDescription> eps;
        const int n = static_cast<int>(rng() % 7);
        for (int i = 0; i < n; ++i) {
            auto e = make_endpoint(modes[rng() % modes.size()], policies[rng() % policies.size()]);
            e.endpoint_url = "opc.tcp://h:" + std::to_string(1 + i);
            eps.push_back(e);
        }
        const auto want = expected_choice(eps);
        if (want) {
            ASSERT_EQ(select_endpoint(eps), *want) << round;
            ASSERT_EQ(select_endpoint(eps), select_endpoint(eps));
        } else {
            ASSERT_EQ(client_error_of([&] { select_endpoint(eps); }).code(), ClientErrc::PolicyUnsupported);
        }
    }
}

TEST(Discover, ReturnsTheAdvertisedEndpointsVerbatim)
{
    auto cfg = server_config("Srv", pki::TrustPolicy::strict());
    cfg.endpoints.erase(cfg.endpoints.begin() + 1);
    auto srv = Server::start(cfg);
    const auto eps = discover(srv->url());
    EXPECT_EQ(eps.size(), 2u);
    EXPECT_EQ(eps, srv->endpoint_descriptions());
}

TEST(Discover, UnreachableHostIsConnectFailed)
{
    std::uint16_t port;
    {
        auto l = net::TcpListener::bind("127.0.0.1", 0);
        port = l.port();
    }
    EXPECT_EQ(client_error_of([&] { discover(net::make_endpoint_url("127.0.0.1", port)); }).code(),
              ClientErrc::ConnectFailed);
    EXPECT_EQ(client_error_of([&] { discover("http://not-opc"); }).code(), ClientErrc::ConnectFailed);
}

TEST(Connect, StrictClientRejectsUnknownServerBeforeAnySecureOpen)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto cfg = with_transcript(client_config("Client", pki::TrustPolicy::strict(), UserIdentity::user("operator", "secret")));
    const auto e = client_error_of([&] { Session::connect_url(srv->url(), cfg); });
    EXPECT_EQ(e.code(), ClientErrc::TrustRejected);
    EXPECT_EQ(e.status(), status::BadCertificateUntrusted);
    EXPECT_EQ(cfg.dial.transcript->count_tagged(net::Direction::Sent, "OPN"), 1u);  // the discovery channel
    EXPECT_EQ(secure_opens_sent(*cfg.dial.transcript), 0u);
    EXPECT_EQ(srv->stats().secure_channels_opened, 0u);

    // with the endpoint already known nothing at all is sent
    auto known = with_transcript(cfg);
    known.endpoint = endpoint_with(discover(srv->url()), MessageSecurityMode::SignAndEncrypt);
    EXPECT_EQ(client_error_of([&] { Session::connect_url(srv->url(), known); }).code(), ClientErrc::TrustRejected);
    EXPECT_TRUE(known.dial.transcript->records().empty());
}

// For every client trust profile: a secure OPN leaves the client iff the profile accepts the server.
TEST(Connect, SecureOpenIsSentExactlyWhenTheServerIsAccepted)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    const auto ep = endpoint_with(discover(srv->url()), MessageSecurityMode::SignAndEncrypt);
    const auto server_cert = pki::CertificateRecord::parse(*ep.server_certificate);
    for (auto policy : {pki::TrustPolicy::strict(), pki::TrustPolicy::accept_all(), pki::TrustPolicy::default_flag(true),
                        pki::TrustPolicy::default_flag(false), pki::TrustPolicy::rejected_store()}) {
        for (bool provisioned : {false, true}) {
            auto cfg = with_transcript(client_config("Client", policy, UserIdentity::user("operator", "secret")));
            if (provisioned) cfg.trust_store->add_trusted(server_cert);
            const bool accepted = judge_endpoint(ep, cfg).accepted;
            bool connected = false;
            try {
                Session::connect(ep, cfg).close();
                connected = true;
            } catch (const ClientError& e) {
                EXPECT_EQ(e.code(), ClientErrc::TrustRejected);
            }
            EXPECT_EQ(connected, accepted) << pki::to_string(policy.kind) << provisioned;
            EXPECT_EQ(secure_opens_sent(*cfg.dial.transcript) > 0, accepted) << pki::to_string(policy.kind);
            const bool expect_accept = provisioned || policy.kind == pki::TrustPolicyKind::AcceptAll ||
                                       (policy.kind == pki::TrustPolicyKind::AcceptAllDefaultFlag && policy.auto_accept);
            EXPECT_EQ(accepted, expect_accept) << pki::to_string(policy.kind) << provisioned;
        }
    }
}

TEST(Connect, RejectedStoreClientRemembersTheServer)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto cfg = client_config("Client", pki::TrustPolicy::rejected_store(), UserIdentity::user("operator", "secret"));
    EXPECT_EQ(client_error_of([&] { Session::connect_url(srv->url(), cfg); }).code(), ClientErrc::TrustRejected);
    ASSERT_EQ(cfg.trust_store->rejected().size(), 1u);
    cfg.trust_store->promote_rejected(cfg.trust_store->rejected()[0].thumbprint);
    auto s = Session::connect_url(srv->url(), cfg);
    EXPECT_EQ(s.read(server::nodes::sensor()), codec::Variant(21.5));
    s.close();
}

TEST(Connect, AcceptAllClientEncryptsTheTokenToWhicheverServerAnswers)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    std::string seen_password;
    bool seen_encrypted = false;
    auto scfg = server_config("Srv2", pki::TrustPolicy::accept_all());
    scfg.authenticate = [&](const server::AuthRequest& a) {
        seen_password = a.password;
        seen_encrypted = a.password_encrypted;
        return status::Good;
    };
    auto other = Server::start(scfg);
    auto cfg = client_config("Client", pki::TrustPolicy::accept_all(), UserIdentity::user("operator", "pw-for-srv"));
    auto s = Session::connect_url(other->url(), cfg);
    EXPECT_TRUE(s.handle().activated);
    EXPECT_EQ(seen_password, "pw-for-srv");
    EXPECT_TRUE(seen_encrypted);
    EXPECT_EQ(s.handle().server_certificate->der, identity("Srv2").certificate.der);
    s.close();
}

TEST(Connect, WrongPasswordIsAuthFailed)
{
    auto scfg = server_config("Srv", pki::TrustPolicy::strict());
    scfg.trust_store->add_trusted(identity("Client").certificate);
    auto srv = Server::start(scfg);
    auto cfg = client_config("Client", pki::TrustPolicy::strict(), UserIdentity::user("operator", "nope"));
    cfg.trust_store->add_trusted(identity("Srv").certificate);
    const auto e = client_error_of([&] { Session::connect_url(srv->url(), cfg); });
    EXPECT_EQ(e.code(), ClientErrc::AuthFailed);
    EXPECT_EQ(e.status(), status::BadUserAccessDenied);
}

TEST(Connect, MissingTokenPolicyIsPolicyUnsupported)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all(), false, true));
    auto cfg = client_config("Client", pki::TrustPolicy::accept_all(), UserIdentity::anonymous());
    EXPECT_EQ(client_error_of([&] { Session::connect_url(srv->url(), cfg); }).code(), ClientErrc::PolicyUnsupported);
}

TEST(Connect, EndpointWithoutCertificateIsRejected)
{
    auto ep = make_endpoint(MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256Sha256));
    auto cfg = client_config("Client", pki::TrustPolicy::accept_all());
    EXPECT_EQ(client_error_of([&] { Session::connect(ep, cfg); }).code(), ClientErrc::TrustRejected);
    cfg.identity.reset();
    EXPECT_EQ(client_error_of([&] { Session::connect(ep, cfg); }).code(), ClientErrc::PolicyUnsupported);
}

// A server that advertises one certificate and answers OpenSecureChannel with another.
TEST(Connect, CertificateSwappedAtOpenIsDetected)
{
    const auto& advertised = identity("Srv");
    const auto& swapped = identity("Other");
    const auto& me = identity("Client");
    auto listener = net::TcpListener::bind("127.0.0.1", 0);
    std::thread fake([&] {
        auto s = listener.accept(net::Millis(5000));
        if (!s) return;
        try {
            s->read_chunk();
            s->send(codec::encode_chunks(codec::AcknowledgeMessage{}, codec::HeaderKind::Raw, nullptr, 0).front());
            const Bytes opn = s->read_chunk();
            auto opened = secchan::unprotect_open_secure_channel(
                opn, advertised, [](const pki::CertificateRecord&) { return pki::TrustVerdict::accept(); });
            const auto msg = codec::reassemble(std::span<const Bytes>(&opened.chunk, 1));
            codec::OpenSecureChannelResponse resp;
            resp.security_token = {7, 1, codec::DateTime::now(), 3600000};
            resp.server_nonce = random_bytes(32);
            codec::ChannelFraming f;
            f.secure_channel_id = 7;
            f.asymmetric = secchan::asymmetric_header(secchan::suite_basic256sha256(), &swapped, &me.certificate);
            auto c = codec::encode_chunks(resp, codec::HeaderKind::Asymmetric, &f, msg.sequence.request_id).front();
            s->send(secchan::protect_open_secure_channel(c, swapped, me.certificate, secchan::suite_basic256sha256()));
            s->read_some(1);
        } catch (const std::exception&) {
        }
    });
    auto ep = make_endpoint(MessageSecurityMode::SignAndEncrypt, std::string(pu::Basic256Sha256));
    ep.endpoint_url = net::make_endpoint_url("127.0.0.1", listener.port());
    ep.server_certificate = advertised.certificate.der;
    ep.user_identity_tokens.push_back({"anon", codec::UserTokenType::Anonymous, {}, {}, {}});
    const auto e = client_error_of([&] { Session::connect(ep, client_config("Client", pki::TrustPolicy::accept_all())); });
    EXPECT_EQ(e.code(), ClientErrc::CertificateChanged);
    fake.join();
}

TEST(Connect, DialOverrideRedirectsTheConnection)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto ep = endpoint_with(discover(srv->url()), MessageSecurityMode::SignAndEncrypt);
    ep.endpoint_url = "opc.tcp://plant-historian.invalid:4840";
    auto cfg = client_config("Client", pki::TrustPolicy::accept_all(), UserIdentity::user("operator", "secret"));
    cfg.dial.dial_override = net::Endpoint{"127.0.0.1", srv->port(), ""};
    auto s = Session::connect(ep, cfg);
    EXPECT_EQ(s.read(server::nodes::status()), codec::Variant("RUNNING"));
    s.close();
}

TEST(Session, ReadWriteMirrorServerSemantics)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = Session::connect_url(srv->url(), client_config("Client", pki::TrustPolicy::accept_all(),
                                                             UserIdentity::user("operator", "secret")));
    EXPECT_EQ(s.endpoint().security_mode, MessageSecurityMode::SignAndEncrypt);
    EXPECT_EQ(s.read(server::nodes::sensor()), codec::Variant(21.5));
    EXPECT_EQ(s.write(server::nodes::setpoint(), codec::Variant(7.25)), status::Good);
    EXPECT_EQ(s.read(server::nodes::setpoint()), codec::Variant(7.25));
    EXPECT_EQ(s.write(server::nodes::status(), codec::Variant("STOP")), status::BadNotWritable);
    s.close();
    EXPECT_FALSE(s.channel().is_open());
}

TEST(Session, ReadAfterServerStopsIsProtocolError)
{
    auto srv = Server::start(server_config("Srv", pki::TrustPolicy::accept_all()));
    auto s = Session::connect_url(srv->url(), client_config("Client", pki::TrustPolicy::accept_all(),
                                                             UserIdentity::user("operator", "secret")));
    srv->stop();
    EXPECT_EQ(client_error_of([&] { s.read(server::nodes::sensor()); }).code(), ClientErrc::ProtocolError);
}

// The plaintext password must not appear in captured traffic unless the token itself is plaintext.
TEST(Session, PasswordNeverCrossesTheWireInClearUnlessTheTokenIsPlain)
{
    const std::string password = "Hunter2-correct-horse";
    auto scfg = server_config("Srv", pki::TrustPolicy::accept_all());
    scfg.users = {{"operator", password}};
    auto srv = Server::start(scfg);
    const auto eps = discover(srv->url());
    struct Case {
        MessageSecurityMode mode;
        bool encrypt_under_none;
        bool expect_clear;
    };
    for (const auto& c : {Case{MessageSecurityMode::SignAndEncrypt, true, false}, Case{MessageSecurityMode::Sign, true, false},
                          Case{MessageSecurityMode::None, true, false}, Case{MessageSecurityMode::None, false, true}}) {
        auto cfg = with_transcript(client_config("Client", pki::TrustPolicy::accept_all(), UserIdentity::user("operator", password)));
        cfg.encrypt_token_under_none = c.encrypt_under_none;
        auto s = Session::connect(endpoint_with(eps, c.mode), cfg);
        s.read(server::nodes::sensor());
        s.close();
        EXPECT_EQ(cfg.dial.transcript->contains_bytes(net::Direction::Sent, to_bytes(password)), c.expect_clear)
            << codec::to_string(c.mode) << c.encrypt_under_none;
    }
}

TEST(UserIdentityTest, NameRequiredWithPassword)
{
    EXPECT_THROW(UserIdentity::user("", "pw"), std::invalid_argument);
    EXPECT_TRUE(UserIdentity::anonymous().is_anonymous());
}

TEST(ClientConfigFile, LoadsIdentityTrustAndUser)
{
    const auto dir = std::filesystem::temp_directory_path() / ("uatrust_client_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    save_identity(identity("Client"), dir / "c.der", dir / "c.pk8");
    pki::write_file(dir / "srv.der", identity("Srv").certificate.der);
    std::ofstream(dir / "client.json") << R"({
        "application": {"name": "HMI"},
        "identity": {"certificate": "c.der", "key": "c.pk8"},
        "trust": {"profile": "Strict", "trusted": ["srv.der"]},
        "user": {"name": "operator", "password": "secret"},
        "encrypt_token_under_none": false,
        "timeout_ms": 1500
    })";
    const auto cfg = load_client_config(dir / "client.json");
    EXPECT_EQ(cfg.application_name, "HMI");
    EXPECT_EQ(cfg.identity->certificate.der, identity("Client").certificate.der);
    EXPECT_EQ(cfg.trust_policy.kind, pki::TrustPolicyKind::Strict);
    EXPECT_TRUE(cfg.trust_store->is_trusted(identity("Srv").certificate));
    EXPECT_EQ(cfg.user.user_name, "operator");
    EXPECT_FALSE(cfg.encrypt_token_under_none);
    EXPECT_EQ(cfg.dial.timeout.count(), 1500);

    std::ofstream(dir / "bad.json") << R"({"user": {"name": ""}})";
    EXPECT_THROW(load_client_config(dir / "bad.json"), pki::ConfigError);
    std::filesystem::remove_all(dir);
}
