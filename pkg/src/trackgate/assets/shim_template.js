"use strict";
(() => {
  // src/interceptors.ts
  var ATTR_RULES = [
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
    ["a", "href", "cross"]
  ];
  var RULE_BY_KEY = {};
  for (const [tag, attr, kind] of ATTR_RULES) {
    RULE_BY_KEY[`${tag}|${attr}`] = kind;
  }
  function lockProperty(target, name) {
    try {
      const value = target[name];
      Object.defineProperty(target, name, { value, writable: false, configurable: false });
    } catch (e) {
    }
  }
  function hardenGlobal(target, name) {
    try {
      const value = target[name];
      Object.defineProperty(target, name, { value, writable: false, configurable: true });
    } catch (e) {
    }
  }
  function interceptProperty(proto, attr, kind, handler) {
    if (!proto) return;
    const descriptor = Object.getOwnPropertyDescriptor(proto, attr);
    if (!descriptor || !descriptor.set) return;
    const nativeSet = descriptor.set;
    Object.defineProperty(proto, attr, {
      get: descriptor.get,
      set(value) {
        nativeSet.call(this, handler.handleURL(value, kind));
      },
      enumerable: descriptor.enumerable,
      configurable: false
    });
  }
  function installElementInterceptors(win, handler) {
    var _a;
    const prototypeFor = [
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
      ["HTMLAnchorElement", "href", "cross"]
    ];
    for (const [ctor, attr, kind] of prototypeFor) {
      interceptProperty((_a = win[ctor]) == null ? void 0 : _a.prototype, attr, kind, handler);
    }
    const nativeSetAttribute = win.Element.prototype.setAttribute;
    win.Element.prototype.setAttribute = function(name, value) {
      const key = `${(this.tagName || "").toLowerCase()}|${String(name).toLowerCase()}`;
      const kind = RULE_BY_KEY[key];
      return nativeSetAttribute.call(this, name, kind ? handler.handleURL(value, kind) : value);
    };
    lockProperty(win.Element.prototype, "setAttribute");
  }
  var MARKUP_ATTR_RE = /(<([a-z0-9]+)\b[^>]*?\s(src|href|action|data)\s*=\s*)("([^"]*)"|'([^']*)')/gi;
  function rewriteMarkup(markup, handler) {
    return String(markup).replace(
      MARKUP_ATTR_RE,
      (whole, prefix, tag, attr, quoted) => {
        const kind = RULE_BY_KEY[`${tag.toLowerCase()}|${attr.toLowerCase()}`];
        if (!kind) return whole;
        const quote = quoted.charAt(0);
        const value = quoted.slice(1, -1);
        return `${prefix}${quote}${handler.handleURL(value, kind)}${quote}`;
      }
    );
  }
  function installDocumentWrite(win, handler) {
    const doc = win.document;
    const nativeWrite = doc.write;
    const nativeWriteln = doc.writeln;
    doc.write = function(...chunks) {
      return nativeWrite.apply(doc, chunks.map((chunk) => rewriteMarkup(chunk, handler)));
    };
    doc.writeln = function(...chunks) {
      return nativeWriteln.apply(doc, chunks.map((chunk) => rewriteMarkup(chunk, handler)));
    };
    lockProperty(doc, "write");
    lockProperty(doc, "writeln");
  }
  function installNetworkInterceptors(win, handler) {
    if (win.XMLHttpRequest) {
      const nativeOpen = win.XMLHttpRequest.prototype.open;
      win.XMLHttpRequest.prototype.open = function(...args) {
        args[1] = handler.handleURL(args[1], "in");
        return nativeOpen.apply(this, args);
      };
      lockProperty(win.XMLHttpRequest.prototype, "open");
    }
    if (win.fetch) {
      const nativeFetch = win.fetch;
      const NativeRequest = win.Request;
      win.fetch = function(input, init) {
        if (input && typeof input === "object" && typeof input.url === "string" && NativeRequest) {
          input = new NativeRequest(handler.handleURL(input.url, "in"), input);
        } else {
          input = handler.handleURL(input, "in");
        }
        return nativeFetch.call(win, input, init);
      };
      hardenGlobal(win, "fetch");
      if (NativeRequest) {
        const WrappedRequest = function(input, init) {
          if (input && typeof input === "object" && typeof input.url === "string") {
            return new NativeRequest(input, init);
          }
          return new NativeRequest(handler.handleURL(input, "in"), init);
        };
        WrappedRequest.prototype = NativeRequest.prototype;
        win.Request = WrappedRequest;
        hardenGlobal(win, "Request");
      }
    }
    if (win.Image) {
      const NativeImage = win.Image;
      const WrappedImage = function(width, height) {
        return arguments.length === 0 ? new NativeImage() : new NativeImage(width, height);
      };
      WrappedImage.prototype = NativeImage.prototype;
      win.Image = WrappedImage;
      hardenGlobal(win, "Image");
    }
    if (win.EventSource) {
      const NativeEventSource = win.EventSource;
      const WrappedEventSource = function(url, init) {
        return init === void 0 ? new NativeEventSource(handler.handleURL(url, "in")) : new NativeEventSource(handler.handleURL(url, "in"), init);
      };
      WrappedEventSource.prototype = NativeEventSource.prototype;
      WrappedEventSource.CONNECTING = NativeEventSource.CONNECTING;
      WrappedEventSource.OPEN = NativeEventSource.OPEN;
      WrappedEventSource.CLOSED = NativeEventSource.CLOSED;
      win.EventSource = WrappedEventSource;
      hardenGlobal(win, "EventSource");
    }
    if (win.WebSocket) {
      const NativeWebSocket = win.WebSocket;
      const WrappedWebSocket = function(url, protocols) {
        return protocols === void 0 ? new NativeWebSocket(handler.handleURL(url, "in")) : new NativeWebSocket(handler.handleURL(url, "in"), protocols);
      };
      WrappedWebSocket.prototype = NativeWebSocket.prototype;
      WrappedWebSocket.CONNECTING = NativeWebSocket.CONNECTING;
      WrappedWebSocket.OPEN = NativeWebSocket.OPEN;
      WrappedWebSocket.CLOSING = NativeWebSocket.CLOSING;
      WrappedWebSocket.CLOSED = NativeWebSocket.CLOSED;
      win.WebSocket = WrappedWebSocket;
      hardenGlobal(win, "WebSocket");
    }
    if (win.open) {
      const nativeOpen = win.open;
      win.open = function(url, name, features) {
        const rewritten = url === void 0 ? url : handler.handleURL(String(url), "cross");
        return nativeOpen.call(win, rewritten, name, features);
      };
      hardenGlobal(win, "open");
    }
  }

  // src/messaging.ts
  function installMessageBlocking(win, handler) {
    const nativePostMessage = win.postMessage;
    win.postMessage = function(message, targetOrigin, transfer) {
      if (typeof targetOrigin === "string" && /^https?:\/\//i.test(targetOrigin)) {
        let origin = null;
        try {
          const url = new URL(targetOrigin);
          origin = `${url.protocol}//${url.host}`;
        } catch (e) {
          origin = null;
        }
        if (origin !== null && handler.isThirdPartyOrigin(origin)) {
          return;
        }
      }
      return nativePostMessage.call(win, message, targetOrigin, transfer);
    };
    hardenGlobal(win, "postMessage");
    win.addEventListener(
      "message",
      (event) => {
        if (typeof event.origin === "string" && /^https?:/.test(event.origin)) {
          if (handler.isThirdPartyOrigin(event.origin)) {
            event.stopImmediatePropagation();
          }
        }
      },
      true
    );
  }

  // src/urls.ts
  function httpOrigin(url) {
    let scheme = url.protocol.replace(":", "");
    if (scheme === "ws") scheme = "http";
    if (scheme === "wss") scheme = "https";
    if (scheme !== "http" && scheme !== "https") return null;
    return `${scheme}://${url.host}`;
  }
  function createUrlHandler(config, getBase = () => document.baseURI) {
    function isThirdPartyOrigin(origin) {
      return origin !== config.firstPartyOrigin && origin !== config.middleOrigin && config.firstPartyAllowlist.indexOf(origin) === -1;
    }
    function handleURL(raw, kind) {
      let url;
      try {
        url = new URL(String(raw), getBase());
      } catch (e) {
        return raw;
      }
      const origin = httpOrigin(url);
      if (origin === null || !isThirdPartyOrigin(origin)) {
        return raw;
      }
      let target = url.href;
      if (url.hash) {
        target = target.slice(0, target.length - url.hash.length);
      }
      let middle = config.middleOrigin;
      if (url.protocol === "ws:" || url.protocol === "wss:") {
        middle = middle.replace(/^http/, "ws");
      }
      const param = kind === "cross" ? config.crossContextParam : config.inContextParam;
      return `${middle}/?${param}=${encodeURIComponent(target)}`;
    }
    return { handleURL, isThirdPartyOrigin };
  }

  // src/index.ts
  function installShim(win, config) {
    const handler = createUrlHandler(config, () => win.document.baseURI);
    installElementInterceptors(win, handler);
    installDocumentWrite(win, handler);
    installNetworkInterceptors(win, handler);
    installMessageBlocking(win, handler);
    const api = { handleURL: handler.handleURL, config };
    Object.defineProperty(win, "__trackgateShim", {
      value: api,
      configurable: true,
      writable: false
    });
    return api;
  }

  // src/bootstrap.ts
  installShim(window, {
    middleOrigin: "{{MIDDLE_ORIGIN}}",
    firstPartyOrigin: "{{FIRST_PARTY_ORIGIN}}",
    inContextParam: "{{IN_CONTEXT_PARAM}}",
    crossContextParam: "{{CROSS_CONTEXT_PARAM}}",
    firstPartyAllowlist: "{{FIRST_PARTY_ALLOWLIST_JSON}}"
  });
})();
