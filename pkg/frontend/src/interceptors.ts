import type { ContextKind, UrlHandler } from "./urls";

/**
 * tag|attribute positions whose dynamic assignment must route through the
 * middle party, mirroring the server-side rewrite rules.  Interception
 * happens at the property/attribute layer, which covers every creation
 * path (createElement, innerHTML-then-assign, cloneNode, ...) with one
 * mechanism.
 */
const ATTR_RULES: ReadonlyArray<readonly [string, string, ContextKind]> = [
  ["script", "src", "in"],
  ["img", "src", "in"],
  ["audio", "src", "in"],
  ["video", "src", "in"],
  ["video", "poster", "in"],
  ["source", "src", "in"],
  ["track", "src", "in"],
  ["input", "src", "in"],
  ["link", "href", "in"],
  ["form", "action", "in"],
  ["iframe", "src", "cross"],
  ["frame", "src", "cross"],
  ["embed", "src", "cross"],
  ["object", "data", "cross"],
  ["a", "href", "cross"],
];

const RULE_BY_KEY: Record<string, ContextKind> = {};
for (const [tag, attr, kind] of ATTR_RULES) {
  RULE_BY_KEY[`${tag}|${attr}`] = kind;
}

/** Prototype-level interceptors are locked non-configurable so page
 * scripts cannot peel them off. */
export function lockProperty(target: object, name: string): void {
  try {
    const value = (target as Record<string, unknown>)[name];
    Object.defineProperty(target, name, { value, writable: false, configurable: false });
  } catch {
    /* already locked */
  }
}

/** Window-level wrappers block reassignment but stay deletable: test
 * runners and devtools restore globals on teardown, and the CSP (not the
 * shim) is the actual security boundary. */
export function hardenGlobal(target: object, name: string): void {
  try {
    const value = (target as Record<string, unknown>)[name];
    Object.defineProperty(target, name, { value, writable: false, configurable: true });
  } catch {
    /* not redefinable */
  }
}

function interceptProperty(
  proto: object | undefined,
  attr: string,
  kind: ContextKind,
  handler: UrlHandler,
): void {
  if (!proto) return;
  const descriptor = Object.getOwnPropertyDescriptor(proto, attr);
  if (!descriptor || !descriptor.set) return;
  const nativeSet = descriptor.set;
  Object.defineProperty(proto, attr, {
    get: descriptor.get,
    set(value: unknown) {
      nativeSet.call(this, handler.handleURL(value as string, kind));
    },
    enumerable: descriptor.enumerable,
    configurable: false,
  });
}

type AnyWindow = Window & typeof globalThis & Record<string, any>;

export function installElementInterceptors(win: AnyWindow, handler: UrlHandler): void {
  const prototypeFor: ReadonlyArray<readonly [string, string, ContextKind]> = [
    ["HTMLScriptElement", "src", "in"],
    ["HTMLImageElement", "src", "in"],
    ["HTMLMediaElement", "src", "in"],
    ["HTMLVideoElement", "poster", "in"],
    ["HTMLSourceElement", "src", "in"],
    ["HTMLTrackElement", "src", "in"],
    ["HTMLInputElement", "src", "in"],
    ["HTMLLinkElement", "href", "in"],
    ["HTMLFormElement", "action", "in"],
    ["HTMLIFrameElement", "src", "cross"],
    ["HTMLFrameElement", "src", "cross"],
    ["HTMLEmbedElement", "src", "cross"],
    ["HTMLObjectElement", "data", "cross"],
    ["HTMLAnchorElement", "href", "cross"],
  ];
  for (const [ctor, attr, kind] of prototypeFor) {
    interceptProperty(win[ctor]?.prototype, attr, kind, handler);
  }

  const nativeSetAttribute = win.Element.prototype.setAttribute;
  win.Element.prototype.setAttribute = function (name: string, value: string) {
    const key = `${(this.tagName || "").toLowerCase()}|${String(name).toLowerCase()}`;
    const kind = RULE_BY_KEY[key];
    return nativeSetAttribute.call(this, name, kind ? handler.handleURL(value, kind) : value);
  };
  lockProperty(win.Element.prototype, "setAttribute");
}

// Best-effort tag-level rewrite of markup handed to document.write.
const MARKUP_ATTR_RE = /(<([a-z0-9]+)\b[^>]*?\s(src|href|action|data)\s*=\s*)("([^"]*)"|'([^']*)')/gi;

export function rewriteMarkup(markup: string, handler: UrlHandler): string {
  return String(markup).replace(
    MARKUP_ATTR_RE,
    (whole, prefix: string, tag: string, attr: string, quoted: string) => {
      const kind = RULE_BY_KEY[`${tag.toLowerCase()}|${attr.toLowerCase()}`];
      if (!kind) return whole;
      const quote = quoted.charAt(0);
      const value = quoted.slice(1, -1);
      return `${prefix}${quote}${handler.handleURL(value, kind)}${quote}`;
    },
  );
}

export function installDocumentWrite(win: AnyWindow, handler: UrlHandler): void {
  const doc = win.document as Document & Record<string, any>;
  const nativeWrite = doc.write;
  const nativeWriteln = doc.writeln;
  doc.write = function (...chunks: string[]) {
    return nativeWrite.apply(doc, chunks.map((chunk) => rewriteMarkup(chunk, handler)));
  };
  doc.writeln = function (...chunks: string[]) {
    return nativeWriteln.apply(doc, chunks.map((chunk) => rewriteMarkup(chunk, handler)));
  };
  lockProperty(doc, "write");
  lockProperty(doc, "writeln");
}

export function installNetworkInterceptors(win: AnyWindow, handler: UrlHandler): void {
  if (win.XMLHttpRequest) {
    const nativeOpen = win.XMLHttpRequest.prototype.open;
    win.XMLHttpRequest.prototype.open = function (...args: unknown[]) {
      args[1] = handler.handleURL(args[1] as string, "in");
      return (nativeOpen as Function).apply(this, args);
    };
    lockProperty(win.XMLHttpRequest.prototype, "open");
  }

  if (win.fetch) {
    const nativeFetch = win.fetch;
    const NativeRequest = win.Request;
    win.fetch = function (input: unknown, init?: unknown) {
      if (input && typeof input === "object" && typeof (input as Request).url === "string" && NativeRequest) {
        input = new NativeRequest(handler.handleURL((input as Request).url, "in"), input as Request);
      } else {
        input = handler.handleURL(input as string, "in");
      }
      return nativeFetch.call(win, input as RequestInfo, init as RequestInit | undefined);
    };
    hardenGlobal(win, "fetch");
    if (NativeRequest) {
      const WrappedRequest = function (input: unknown, init?: unknown) {
        if (input && typeof input === "object" && typeof (input as Request).url === "string") {
          return new NativeRequest(input as Request, init as RequestInit | undefined);
        }
        return new NativeRequest(handler.handleURL(input as string, "in"), init as RequestInit | undefined);
      };
      WrappedRequest.prototype = NativeRequest.prototype;
      win.Request = WrappedRequest as unknown as typeof Request;
      hardenGlobal(win, "Request");
    }
  }

  if (win.Image) {
    const NativeImage = win.Image;
    // src assignment is caught by the HTMLImageElement setter; wrapping
    // keeps `new Image(w, h)` instances on the patched prototype.
    const WrappedImage = function (width?: number, height?: number) {
      return arguments.length === 0 ? new NativeImage() : new NativeImage(width, height);
    };
    WrappedImage.prototype = NativeImage.prototype;
    win.Image = WrappedImage as unknown as typeof Image;
    hardenGlobal(win, "Image");
  }

  if (win.EventSource) {
    const NativeEventSource = win.EventSource;
    const WrappedEventSource = function (url: string, init?: EventSourceInit) {
      return init === undefined
        ? new NativeEventSource(handler.handleURL(url, "in"))
        : new NativeEventSource(handler.handleURL(url, "in"), init);
    };
    WrappedEventSource.prototype = NativeEventSource.prototype;
    (WrappedEventSource as any).CONNECTING = NativeEventSource.CONNECTING;
    (WrappedEventSource as any).OPEN = NativeEventSource.OPEN;
    (WrappedEventSource as any).CLOSED = NativeEventSource.CLOSED;
    win.EventSource = WrappedEventSource as unknown as typeof EventSource;
    hardenGlobal(win, "EventSource");
  }

  if (win.WebSocket) {
    const NativeWebSocket = win.WebSocket;
    const WrappedWebSocket = function (url: string, protocols?: string | string[]) {
      return protocols === undefined
        ? new NativeWebSocket(handler.handleURL(url, "in"))
        : new NativeWebSocket(handler.handleURL(url, "in"), protocols);
    };
    WrappedWebSocket.prototype = NativeWebSocket.prototype;
    (WrappedWebSocket as any).CONNECTING = NativeWebSocket.CONNECTING;
    (WrappedWebSocket as any).OPEN = NativeWebSocket.OPEN;
    (WrappedWebSocket as any).CLOSING = NativeWebSocket.CLOSING;
    (WrappedWebSocket as any).CLOSED = NativeWebSocket.CLOSED;
    win.WebSocket = WrappedWebSocket as unknown as typeof WebSocket;
    hardenGlobal(win, "WebSocket");
  }

  if (win.open) {
    const nativeOpen = win.open;
    win.open = function (url?: string | URL, name?: string, features?: string) {
      const rewritten = url === undefined ? url : handler.handleURL(String(url), "cross");
      return nativeOpen.call(win, rewritten as string, name, features);
    };
    hardenGlobal(win, "open");
  }
}
