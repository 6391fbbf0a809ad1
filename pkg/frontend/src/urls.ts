import type { ShimConfig } from "./config";

/** Which browsing context the content will execute in. */
export type ContextKind = "in" | "cross";

export interface UrlHandler {
  /** Rewrite a third-party URL onto the middle party; anything else passes through. */
  handleURL(raw: string, kind: ContextKind): string;
  isThirdPartyOrigin(origin: string): boolean;
}

function httpOrigin(url: URL): string | null {
  // ws/wss piggyback on the http origins for classification.
  let scheme = url.protocol.replace(":", "");
  if (scheme === "ws") scheme = "http";
  if (scheme === "wss") scheme = "https";
  if (scheme !== "http" && scheme !== "https") return null;
  return `${scheme}://${url.host}`;
}

export function createUrlHandler(
  config: ShimConfig,
  getBase: () => string = () => document.baseURI,
): UrlHandler {
  function isThirdPartyOrigin(origin: string): boolean {
    return (
      origin !== config.firstPartyOrigin &&
      origin !== config.middleOrigin &&
      config.firstPartyAllowlist.indexOf(origin) === -1
    );
  }

  function handleURL(raw: string, kind: ContextKind): string {
    let url: URL;
    try {
      url = new URL(String(raw), getBase());
    } catch {
      return raw; // unparsable: leave it, the CSP is the backstop
    }
    const origin = httpOrigin(url);
    if (origin === null || !isThirdPartyOrigin(origin)) {
      return raw;
    }
    let target = url.href;
    if (url.hash) {
      // fragments never reach the wire; keep them out of the encapsulation
      target = target.slice(0, target.length - url.hash.length);
    }
    let middle = config.middleOrigin;
    if (url.protocol === "ws:" || url.protocol === "wss:") {
      // "http"->"ws" and "https"->"wss" via the shared prefix
      middle = middle.replace(/^http/, "ws");
    }
    const param = kind === "cross" ? config.crossContextParam : config.inContextParam;
    return `${middle}/?${param}=${encodeURIComponent(target)}`;
  }

  return { handleURL, isThirdPartyOrigin };
}
